"""Input validation helpers shared by the estimators and kernels."""

import numbers

import numpy as np

from .exceptions import InvalidParameterError


def check_lambda(lam):
    """Return ``lam`` as float, rejecting zero and non-finite values.

    Only the case of non-vanishing drift is covered; the zero-drift
    (Stokes) regime has different asymptotics and is out of scope.
    """
    if not isinstance(lam, numbers.Real) and not np.isscalar(lam):
        raise InvalidParameterError(f"lambda must be a real scalar, got {lam!r}")
    lam = float(lam)
    if not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be finite, got {lam}")
    if lam == 0.0:
        raise InvalidParameterError(
            "lambda = 0 is not supported: only non-zero drift (Oseen regime) is implemented"
        )
    return lam


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value}")
    return value


def check_points(x, name="x"):
    """Coerce ``x`` to a float array whose last axis has length 3."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != 3:
        raise InvalidParameterError(f"{name} must have trailing dimension 3, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return x


def check_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)

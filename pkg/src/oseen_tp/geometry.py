"""Wake function, anisotropic weights and ray sampling.

The wake function ``s(y) = |y| + y_1`` vanishes on the negative ``y_1``
axis.  Every anisotropic decay estimate pairs ``(1 + |x|)`` with
``(1 + s(lambda x))``, so ``s(lambda x)`` is small exactly in the wake
region behind an obstacle in the drift ``lambda e_1``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_lambda, check_points
from .exceptions import InvalidParameterError

DEFAULT_RAY_FACTOR = 1.3


def wake(x, lam):
    """Return ``s(lambda x) = |lambda x| + lambda x_1``.

    ``x`` may be a single 3-vector or an array of shape ``(..., 3)``.
    """
    lam = check_lambda(lam)
    x = check_points(x)
    r = np.linalg.norm(x, axis=-1)
    s = abs(lam) * r + lam * x[..., 0]
    # rounding can leave tiny negatives on the wake axis
    return np.maximum(s, 0.0)


@dataclass(frozen=True)
class AnisoWeight:
    """Exponents of the weight ``(1 + |x|)^-a (1 + s(lambda x))^-b``."""

    a: float = 0.0
    b: float = 0.0

    def __call__(self, x, lam):
        return aniso_weight(x, lam, self)


def aniso_weight(x, lam, w):
    x = check_points(x)
    r = np.linalg.norm(x, axis=-1)
    s = wake(x, lam)
    return (1.0 + r) ** (-float(w.a)) * (1.0 + s) ** (-float(w.b))


@dataclass(frozen=True)
class WakePoint:
    x: np.ndarray
    r: float
    s_lambda: float


@dataclass(frozen=True)
class Ray:
    direction: np.ndarray
    radii: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,):
            raise InvalidParameterError("ray direction must be a 3-vector")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidParameterError("ray direction must have unit length")
        radii = np.asarray(self.radii, dtype=float).ravel()
        if np.any(radii <= 0):
            raise InvalidParameterError("ray radii must be positive")
        if np.any(np.diff(radii) <= 0):
            raise InvalidParameterError("ray radii must be strictly increasing")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def from_vector(cls, v, radii):
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v), radii)

    @property
    def points(self):
        return self.radii[:, None] * self.direction[None, :]


def geometric_radii(r_min, r_max, factor=DEFAULT_RAY_FACTOR):
    """Radii ``r_min * factor**n`` up to ``r_max`` (inclusive up to rounding)."""
    if r_min <= 0 or r_max <= r_min or factor <= 1:
        raise InvalidParameterError("need 0 < r_min < r_max and factor > 1")
    n = int(np.floor(np.log(r_max / r_min) / np.log(factor) + 1e-9))
    return r_min * factor ** np.arange(n + 1)


def sample_ray(ray, lam):
    """Return the ray's points as :class:`WakePoint` records."""
    if len(ray.radii) == 0:
        return []
    pts = ray.points
    s = wake(pts, lam)
    return [WakePoint(p, float(r), float(si)) for p, r, si in zip(pts, ray.radii, s)]


def wake_axis(lam):
    """Unit vector pointing into the wake, ``-sign(lambda) e_1``."""
    lam = check_lambda(lam)
    return np.array([-np.sign(lam), 0.0, 0.0])


def default_rays(lam, radii):
    """Wake axis, upstream axis, a perpendicular and the wake diagonal."""
    sgn = np.sign(check_lambda(lam))
    return {
        "wake": Ray(np.array([-sgn, 0.0, 0.0]), radii),
        "upstream": Ray(np.array([sgn, 0.0, 0.0]), radii),
        "perp": Ray(np.array([0.0, 1.0, 0.0]), radii),
        "diag": Ray.from_vector([-sgn, 1.0, 0.0], radii),
    }


def rotation_about_e1(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])

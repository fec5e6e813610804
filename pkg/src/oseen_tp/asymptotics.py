"""Leading terms, remainders and decay-rate fits for far fields.

A solution of the time-periodic problem driven by compactly supported
data behaves like ``Gamma0(x) c0`` (time mean) and like
``sum_k Gamma_k(x) c_k exp(i w_k t)`` (purely periodic part) far away, where
``c0`` and ``c_k`` are the spatial integrals of the time coefficients of the
data.  This module computes those coefficients, the remainders after the
leading terms, and least-squares decay exponents along rays.

Far-field values of a box solution are obtained from the whole-space
representation

    P u   = Gamma0 * P f  - grad Gamma0 * P (u (x) u)
    P'u   = Gamma'  * P'f - grad Gamma' * P'(u (x) u)

with ``u (x) u`` taken from the grid solution inside the box (see
:class:`FarField`).  Grid values themselves are periodic in space and do
not decay.
"""

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lambda, check_points, check_positive
from .convolve import _parts, convolve_gamma0, gamma_perp_convolution_modes, sphere_rule
from .exceptions import DomainError, InvalidParameterError, RankError, ShapeError
from .geometry import Ray, default_rays, wake
from .periodic import gamma_perp_modes, omega
from .steady import gamma0, grad_gamma0
from .torus import TorusField

log = logging.getLogger(__name__)

DEFAULT_INNER_RADIUS = 4.0
MODELS = ("pure_power", "power_with_log", "wake_product")
QUANTITIES = ("v", "w", "grad_v", "grad_w", "R0", "Rperp")


# ---------------------------------------------------------------------------
# leading coefficients


@dataclass(frozen=True, eq=False)
class LeadingData:
    """``c0 = int_T int f`` and the positive-mode integrals ``c_k``."""

    steady_coefficient: np.ndarray
    modes: np.ndarray
    mode_coefficients: np.ndarray
    period: float

    def periodic_coefficient(self, t):
        """``int P'f(t, y) dy``, shape ``t.shape + (3,)``."""
        t = np.asarray(t, dtype=float)
        if self.modes.size == 0:
            return np.zeros(t.shape + (3,))
        ph = np.exp(1j * np.multiply.outer(t, omega(self.modes, self.period)))
        return 2.0 * np.einsum("...k,kj->...j", ph, self.mode_coefficients).real


def _support(f):
    parts = _parts(f)
    if len(parts) == 1:
        return np.asarray(parts[0][1].center, dtype=float), float(parts[0][1].support_radius)
    return np.zeros(3), float(f.support_radius)


def support_extent(f):
    """Radius of the smallest origin-centred ball holding the support."""
    c, R = _support(f)
    return float(np.linalg.norm(c) + R)


def ball_rule(center, radius, order=16, panels=4):
    """Gauss rule on a ball with ``panels`` radial and polar panels."""
    return sphere_rule(
        np.asarray(center, dtype=float),
        np.linspace(0.0, radius, panels + 1),
        np.linspace(0.0, np.pi, panels + 1),
        np.linspace(0.0, 2 * np.pi, 2 * panels + 1),
        order,
    )


def leading_coefficient(f, order=16, n_time=64, cutoff=1e-12):
    """Spatial integrals of the time coefficients of ``f``.

    The ball ``B(center, R0)`` is integrated with a Gauss rule and time with
    ``n_time`` equispaced samples (exact for trigonometric profiles of
    lower degree).  Modes below ``cutoff`` times the largest are dropped.
    """
    center, R = _support(f)
    period = f.period
    pts, w = ball_rule(center, R, order)
    t = np.arange(n_time) * period / n_time
    ints = np.stack([np.einsum("n,nj->j", w, np.asarray(f(tn, pts), dtype=float)) for tn in t])
    c = np.fft.fft(ints, axis=0) / n_time
    c0 = c[0].real
    ks = np.arange(1, (n_time + 1) // 2)
    ck = c[ks]
    scale = max(np.max(np.abs(c)), 1e-300)
    keep = np.max(np.abs(ck), axis=-1) > cutoff * scale
    return LeadingData(c0, ks[keep], ck[keep], float(period))


def _check_far(x, f, r_inner):
    x = check_points(x)
    r = np.linalg.norm(x, axis=-1)
    lim = max(2.0 * support_extent(f), float(r_inner))
    if np.any(r < lim):
        raise DomainError(f"remainders are defined for |x| >= max(2 R0, {r_inner}) = {lim:.3g}")
    return x


def remainder_steady(v, f, lam, r_inner=DEFAULT_INNER_RADIUS, leading=None):
    """``R0(x) = v(x) - Gamma0(x) c0`` as a callable on ``(..., 3)`` points.

    ``v`` is a callable returning time-mean velocities.
    """
    lam = check_lambda(lam)
    lead = leading_coefficient(f) if leading is None else leading
    c0 = lead.steady_coefficient

    def R0(x):
        x = _check_far(x, f, r_inner)
        return np.asarray(v(x)) - gamma0(x, lam) @ c0

    return R0


def leading_periodic_modes(x, lam, leading, tol=1e-10):
    """``Gamma_k(x) c_k`` for one point, shape ``(K, 3)``."""
    if leading.modes.size == 0:
        return np.zeros((0, 3), dtype=complex)
    G, _, _ = gamma_perp_modes(x, lam, leading.period, leading.modes, tol=tol, max_refine=4)
    return np.einsum("kjl,kl->kj", G, leading.mode_coefficients)


def synthesize(ks, modes, t, period):
    """``2 Re sum_k m_k exp(i w_k t)`` for a real field from positive modes."""
    t = np.asarray(t, dtype=float)
    if len(ks) == 0:
        return np.zeros(t.shape + modes.shape[1:])
    ph = np.exp(1j * np.multiply.outer(t, omega(np.asarray(ks), period)))
    return 2.0 * np.tensordot(ph, modes, axes=(-1, 0)).real


def time_l2(modes):
    """``L^2(T)`` norm (normalized measure) of the field with these positive modes."""
    m = np.asarray(modes)
    if m.shape[0] == 0:
        return 0.0
    return float(np.sqrt(2.0 * np.sum(np.abs(m) ** 2)))


def remainder_periodic(w, f, lam, period=None, r_inner=DEFAULT_INNER_RADIUS, leading=None, tol=1e-10):
    """``R'(t, x) = w(t, x) - sum_k Gamma_k(x) c_k exp(i w_k t)``.

    ``w`` is a callable ``(t, x) -> (..., 3)`` for a single point ``x``.
    """
    lam = check_lambda(lam)
    lead = leading_coefficient(f) if leading is None else leading
    period = lead.period if period is None else check_positive(period, "period")
    cache = {}

    def Rp(t, x):
        x = _check_far(x, f, r_inner)
        if x.shape != (3,):
            raise ShapeError("periodic remainders are evaluated one point at a time")
        key = tuple(x)
        if key not in cache:
            cache[key] = leading_periodic_modes(x, lam, lead, tol)
        return np.asarray(w(t, x)) - synthesize(lead.modes, cache[key], t, period)

    return Rp


# ---------------------------------------------------------------------------
# far field of a box solution


def _quadratic_modes(u, k_max):
    """Time modes ``k = 0..k_max`` of ``u (x) u``, shape ``(k, n, n, n, 3, 3)``."""
    n_t = u.shape[0]
    out = np.empty((k_max + 1,) + u.shape[1:4] + (3, 3), dtype=complex)
    for i in range(3):
        for j in range(i, 3):
            c = sfft.rfft(u[..., i] * u[..., j], axis=0)[: k_max + 1] / n_t
            out[..., i, j] = c
            out[..., j, i] = c
    return out


def near_field(u, source, lam, table=None):
    """``Gamma * f`` without images plus the nonlinear part ``u - S f`` of ``u``."""
    from .solver import SolveConfig, free_space_linear, solve_linear

    g = u.grid
    f = source.sample(g)
    lin = solve_linear(f, SolveConfig(lam, g.period, g)).u.values
    vals = u.values - lin
    del lin
    return vals + free_space_linear(f, lam, table).values


class FarField:
    """Far-field values of a box solution via the representation formula.

    ``u (x) u`` is taken from the grid solution ``u`` inside the box;
    its tail outside the box is neglected.  The data part uses the
    quadrature routes of :mod:`oseen_tp.convolve`.  The purely periodic
    nonlinear part uses the tabulated mode tensors of ``table`` (a
    :class:`~oseen_tp.kernel_tables.TimeNormTable` with matching ``lambda``
    and period), restricted to the modes present in ``u (x) u``.

    With ``nonlinear=False`` only the data part is evaluated (linear
    solutions).

    The box solution carries the flow of its periodic images (most visibly
    the wrapped-around wake), which is of the size of the far field itself.
    With ``near="hybrid"`` (default) the quadratic term is therefore built
    from ``Gamma * f`` on the grid without images plus the nonlinear
    correction ``u - S f`` of the box solution, whose image error enters
    only at third order in the data.  ``near="box"`` uses ``u`` as it is.
    """

    def __init__(
        self,
        u,
        source,
        lam,
        table=None,
        nonlinear=True,
        near="hybrid",
        threshold=1e-9,
        tol=1e-10,
        steady_tol=1e-6,
    ):
        self.lam = check_lambda(lam)
        self.source = source
        self.period = source.period
        self.nonlinear = bool(nonlinear)
        self.tol = tol
        self.steady_tol = steady_tol
        self.leading = leading_coefficient(source)
        self.table = table
        self._cache = {}
        if not self.nonlinear:
            return
        if not isinstance(u, TorusField):
            u = u.u
        g = u.grid
        if abs(g.period - self.period) > 1e-12 * self.period:
            raise InvalidParameterError("solution and data periods differ")
        if table is not None:
            if abs(table.lam - self.lam) > 1e-12 or abs(table.period - self.period) > 1e-12:
                raise InvalidParameterError("kernel table has a different lambda or period")
        k_max = min(g.n_time // 2 - 1, table.K if table is not None else 0)
        if near == "hybrid":
            vals = near_field(u, source, lam, table)
        elif near == "box":
            vals = u.values
        else:
            raise InvalidParameterError("near must be 'hybrid' or 'box'")
        N = _quadratic_modes(vals, k_max)
        del vals
        pts = g.points().reshape(-1, 3)
        N = N.reshape(N.shape[0], -1, 3, 3)
        big = np.max(np.abs(N))
        self.h = g.h
        self.h3 = g.h**3
        self.modes = []
        for k in range(N.shape[0]):
            mag = np.max(np.abs(N[k]), axis=(-2, -1))
            keep = mag > threshold * big
            if k == 0:
                self.steady_pts, self.steady_N = pts[keep], N[0][keep].real
            elif np.any(keep):
                self.modes.append((k, pts[keep], N[k][keep]))
        if table is None:
            log.warning("no kernel table: the periodic nonlinear part is left out")
        self.box_half_length = g.box_half_length

    # nonlinear parts ---------------------------------------------------------

    def _steady_nonlinear(self, x, grad=False, chunk=100_000):
        """``(grad Gamma0 * P(u (x) u))(x)`` as a grid sum."""
        if not self.nonlinear:
            return np.zeros(3)
        total = np.zeros(3)
        for a in range(0, len(self.steady_pts), chunk):
            z = x - self.steady_pts[a : a + chunk]
            Nn = self.steady_N[a : a + chunk]
            ok = np.linalg.norm(z, axis=-1) > 1e-8
            G = grad_gamma0(z[ok], self.lam)
            total += np.einsum("nmjl,nlm->j", G, Nn[ok])
        return total * self.h3

    def _periodic_nonlinear(self, x, chunk=50_000):
        """Modes of ``(grad Gamma' * P'(u (x) u))(x)``, shape ``(K, 3)``."""
        ks = self.mode_numbers()
        out = np.zeros((len(ks), 3), dtype=complex)
        if not self.nonlinear or self.table is None:
            return out
        lo = self.table.radii[0]
        for k, pts, Nk in self.modes:
            i = ks.index(k)
            for a in range(0, len(pts), chunk):
                z = x - pts[a : a + chunk]
                ok = np.linalg.norm(z, axis=-1) >= lo
                G = self.table.mode_tensors(z[ok], grad=True, modes=[k])[:, 0]
                out[i] += np.einsum("nmjl,nlm->j", G, Nk[a : a + chunk][ok])
        return out * self.h3

    def mode_numbers(self):
        ks = set(int(k) for k in self.leading.modes)
        if self.nonlinear:
            ks |= {k for k, _, _ in self.modes}
        return sorted(ks)

    def _fd(self, fn, x):
        """Gradient ``[m, ...]`` of a grid sum by central differences with steps
        ``h`` and ``2h`` (grid nodes map to grid nodes), Richardson combined."""
        cols = []
        for m in range(3):
            e = np.zeros(3)
            e[m] = self.h
            d1 = (fn(x + e) - fn(x - e)) / (2 * self.h)
            d2 = (fn(x + 2 * e) - fn(x - 2 * e)) / (4 * self.h)
            cols.append((4 * d1 - d2) / 3)
        return np.stack(cols)

    # data parts --------------------------------------------------------------

    def _data_periodic(self, x, deriv=0):
        ks = self.mode_numbers()
        shape = (len(ks), 3) if deriv == 0 else (len(ks), 3, 3)
        out = np.zeros(shape, dtype=complex)
        kd, vals, _ = gamma_perp_convolution_modes(
            self.source, x, self.lam, self.period, deriv=deriv, tol=self.tol, max_refine=4
        )
        for k, v in zip(kd, vals):
            out[ks.index(int(k))] = v
        return out

    # public evaluations --------------------------------------------------------

    def _memo(self, name, x, fn):
        key = (name,) + tuple(np.round(x, 12))
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def steady(self, x):
        """Time mean ``P u(x)`` at one point."""
        x = np.asarray(x, dtype=float)
        return self._memo(
            "v",
            x,
            lambda: convolve_gamma0(self.source, x, self.lam, tol=self.steady_tol, max_order=30).values
            - self._steady_nonlinear(x),
        )

    def steady_leading(self, x):
        return gamma0(np.asarray(x, dtype=float), self.lam) @ self.leading.steady_coefficient

    def steady_remainder(self, x):
        """``R0(x)``; the data part uses the subtracted kernel directly."""
        x = _check_far(np.asarray(x, dtype=float), self.source, DEFAULT_INNER_RADIUS)
        return self._memo(
            "R0",
            x,
            lambda: convolve_gamma0(
                self.source,
                x,
                self.lam,
                tol=self.steady_tol,
                max_order=30,
                remainder=True,
                atol=1e-12 * np.linalg.norm(self.steady_leading(x)),
            ).values
            - self._steady_nonlinear(x),
        )

    def steady_gradient(self, x):
        """``grad P u(x)``, ``[m, j]``."""
        x = np.asarray(x, dtype=float)

        def fn():
            g = convolve_gamma0(self.source, x, self.lam, deriv=1, tol=self.steady_tol, max_order=30).values
            if self.nonlinear:
                g = g - self._fd(self._steady_nonlinear, x)
            return g

        return self._memo("grad_v", x, fn)

    def periodic_modes(self, x):
        """Positive modes of ``P'u(x)``, shape ``(K, 3)``, for ``mode_numbers()``."""
        x = np.asarray(x, dtype=float)
        return self._memo("w", x, lambda: self._data_periodic(x) - self._periodic_nonlinear(x))

    def periodic(self, t, x):
        return synthesize(self.mode_numbers(), self.periodic_modes(x), t, self.period)

    def periodic_leading_modes(self, x):
        ks = self.mode_numbers()
        out = np.zeros((len(ks), 3), dtype=complex)
        vals = leading_periodic_modes(np.asarray(x, dtype=float), self.lam, self.leading, self.tol)
        for k, v in zip(self.leading.modes, vals):
            out[ks.index(int(k))] = v
        return out

    def periodic_remainder_modes(self, x):
        x = _check_far(np.asarray(x, dtype=float), self.source, DEFAULT_INNER_RADIUS)
        return self._memo("Rperp", x, lambda: self.periodic_modes(x) - self.periodic_leading_modes(x))

    def periodic_gradient_modes(self, x):
        """Positive modes of ``grad P'u(x)``, shape ``(K, 3, 3)``."""
        x = np.asarray(x, dtype=float)

        def fn():
            g = self._data_periodic(x, deriv=1)
            if self.nonlinear and self.table is not None:
                g = g - np.moveaxis(self._fd(self._periodic_nonlinear, x), 0, 1)
            return g

        return self._memo("grad_w", x, fn)

    def magnitude(self, quantity, x):
        """Scalar size of ``quantity`` at ``x`` (time ``L^2`` norm for periodic ones)."""
        if quantity == "v":
            return float(np.linalg.norm(self.steady(x)))
        if quantity == "w":
            return time_l2(self.periodic_modes(x))
        if quantity == "grad_v":
            return float(np.linalg.norm(self.steady_gradient(x)))
        if quantity == "grad_w":
            return time_l2(self.periodic_gradient_modes(x))
        if quantity == "R0":
            return float(np.linalg.norm(self.steady_remainder(x)))
        if quantity == "Rperp":
            return time_l2(self.periodic_remainder_modes(x))
        if quantity == "lead_v":
            return float(np.linalg.norm(self.steady_leading(x)))
        if quantity == "lead_w":
            return time_l2(self.periodic_leading_modes(x))
        raise InvalidParameterError(f"unknown quantity {quantity!r}")


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay exponent of ``log |q|`` along a ray.

    ``exponent`` multiplies ``log r``; ``wake_exponent`` multiplies
    ``log(1 + s)`` for the wake-product model and ``log_power`` multiplies
    ``log log r`` when ``log_factor`` is set.
    """

    exponent: float
    log_factor: bool
    halfwidth: float
    residual: float
    ray: object = None
    model: str = "pure_power"
    n_samples: int = 0
    wake_exponent: float = None
    log_power: float = None
    aic: float = None
    coefficients: tuple = field(default_factory=tuple)


def _design(r, s, model):
    cols = [np.ones_like(r), np.log(r)]
    if model == "power_with_log":
        if np.any(r <= 1.0):
            raise DomainError("the log model needs r > 1")
        cols.append(np.log(np.log(r)))
    elif model == "wake_product":
        cols.append(np.log1p(s))
    return np.stack(cols, axis=-1)


def _unpack(samples, lam):
    """Accept ``(points, magnitudes)``, a list of ``(WakePoint, m)`` or of ``(x, m)``."""
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[1]) == 1:
        pts, mags = samples
        pts = check_points(np.atleast_2d(pts))
    else:
        pts, mags = [], []
        for p, m in samples:
            pts.append(getattr(p, "x", p))
            mags.append(m)
        pts = check_points(np.atleast_2d(np.asarray(pts, dtype=float)))
    mags = np.asarray(mags, dtype=float)
    if pts.shape[0] != mags.shape[0]:
        raise ShapeError("points and magnitudes differ in length")
    return pts, mags


def fit_decay(samples, model="pure_power", lam=1.0, ray=None, min_samples=5, min_decades=1.0, level=0.95):
    """Fit ``log |q| = a + p log r (+ q log log r | + b log(1 + s))``.

    ``model="auto"`` fits with and without the log regressor and returns
    the one with the lower small-sample corrected Akaike criterion.  Raises :class:`DomainError`
    for non-positive magnitudes, fewer than ``min_samples`` samples or radii
    spanning less than ``min_decades`` decades, and :class:`RankError` for a
    collinear design.
    """
    if model == "auto":
        fits = [fit_decay(samples, m, lam, ray, min_samples, min_decades, level) for m in MODELS[:2]]
        return min(fits, key=lambda f: (f.aic, f.model != "pure_power"))
    if model not in MODELS:
        raise InvalidParameterError(f"model must be one of {MODELS} or 'auto'")
    pts, mags = _unpack(samples, lam)
    if np.any(~np.isfinite(mags)) or np.any(mags <= 0):
        raise DomainError("decay fits need positive magnitudes")
    n = mags.size
    if n < min_samples:
        raise DomainError(f"decay fits need at least {min_samples} samples, got {n}")
    r = np.linalg.norm(pts, axis=-1)
    if np.log10(r.max() / r.min()) < min_decades - 1e-9:
        raise DomainError(f"radii must span at least {min_decades} decade(s)")
    s = wake(pts, lam)
    X = _design(r, s, model)
    y = np.log(mags)
    p = X.shape[1]
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0) or n <= p - 1:
        raise RankError(f"collinear design for model {model!r}")
    sv = np.linalg.svd(X / norms, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise RankError(f"collinear design for model {model!r}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    rss = float(res @ res)
    dof = n - p
    if dof > 0:
        sigma2 = rss / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        half = float(stats.t.ppf(0.5 + level / 2, dof) * np.sqrt(cov[1, 1]))
    else:
        half = np.inf
    # small-sample corrected Akaike criterion
    aic = n * np.log(max(rss / n, 1e-30)) + 2 * p
    aic = aic + 2 * p * (p + 1) / (n - p - 1) if n - p - 1 > 0 else np.inf
    return DecayFit(
        exponent=float(coef[1]),
        log_factor=model == "power_with_log",
        halfwidth=half,
        residual=float(np.sqrt(rss / n)),
        ray=ray,
        model=model,
        n_samples=n,
        wake_exponent=float(coef[2]) if model == "wake_product" else None,
        log_power=float(coef[2]) if model == "power_with_log" else None,
        aic=float(aic),
        coefficients=tuple(float(c) for c in coef),
    )


class DecayRateEstimator(RegressorMixin, BaseEstimator):
    """Scikit-learn style wrapper of :func:`fit_decay`.

    ``X`` holds sample points ``(n, 3)``, ``y`` the positive magnitudes;
    ``predict`` returns fitted magnitudes.
    """

    def __init__(self, model="auto", lam=1.0, min_samples=5, min_decades=1.0):
        self.model = model
        self.lam = lam
        self.min_samples = min_samples
        self.min_decades = min_decades

    def fit(self, X, y):
        self.fit_ = fit_decay(
            (np.asarray(X, dtype=float), np.asarray(y, dtype=float)),
            self.model,
            self.lam,
            min_samples=self.min_samples,
            min_decades=self.min_decades,
        )
        self.exponent_ = self.fit_.exponent
        self.log_factor_ = self.fit_.log_factor
        self.model_ = self.fit_.model
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        pts = check_points(np.atleast_2d(np.asarray(X, dtype=float)))
        r = np.linalg.norm(pts, axis=-1)
        Xd = _design(r, wake(pts, self.lam), self.model_)
        return np.exp(Xd @ np.asarray(self.fit_.coefficients))


# ---------------------------------------------------------------------------
# reports


def expansion_rays(lam, radii):
    """Wake and upstream axes, a perpendicular and the wake diagonal."""
    return default_rays(lam, radii)


def ray_magnitudes(far, quantity, ray):
    return np.array([far.magnitude(quantity, p) for p in ray.points])


def expand_report(far, radii, quantities=QUANTITIES, rays=None, model="auto"):
    """Fit every quantity along every ray; rows for the expansion CSV."""
    rays = expansion_rays(far.lam, radii) if rays is None else rays
    rows = []
    for name, ray in rays.items():
        for q in quantities:
            mags = ray_magnitudes(far, q, ray)
            try:
                fit = fit_decay((ray.points, mags), model, far.lam, ray=name)
                rows.append(
                    {
                        "ray": name,
                        "quantity": q,
                        "exponent": fit.exponent,
                        "log_flag": fit.log_factor,
                        "residual": fit.residual,
                        "n_samples": fit.n_samples,
                    }
                )
            except DomainError as exc:
                log.warning("no fit for %s on %s: %s", q, name, exc)
                rows.append(
                    {"ray": name, "quantity": q, "exponent": float("nan"), "log_flag": False,
                     "residual": float("nan"), "n_samples": int(np.sum(mags > 0))}
                )
    return rows


def report_csv(rows):
    buf = io.StringIO()
    cols = ["ray", "quantity", "exponent", "log_flag", "residual", "n_samples"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        out = dict(row)
        for k in ("exponent", "residual"):
            out[k] = f"{row[k]:.6g}"
        out["log_flag"] = int(bool(row["log_flag"]))
        w.writerow(out)
    return buf.getvalue()


def ray_from(direction, radii):
    return Ray.from_vector(direction, radii)


def grid_radii(h, r_min, r_max, n):
    """About ``n`` geometric radii in ``[r_min, r_max]`` rounded to multiples of ``h``.

    Ray points on axis-aligned rays then sit on grid nodes, where the grid
    sums of odd kernels are balanced around the evaluation point.
    """
    r = np.unique(np.round(np.geomspace(r_min, r_max, n) / h)) * h
    return r[r > 0]

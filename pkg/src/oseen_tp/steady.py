"""Closed-form steady Oseen fundamental solution.

The velocity tensor is obtained from the scalar potential
``psi(x) = Ein(s(lambda x) / 2)`` through

    Gamma0_jl = (delta_jl Laplace - d_j d_l) psi / (4 pi |lambda|),

where ``Ein(z) = int_0^z (1 - exp(-t)) / t dt``.  All derivatives are
applied analytically: the chain rule combines the derivatives of ``Ein``
with those of ``sigma(x) = (|lambda| |x| + lambda x_1) / 2``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from ._validation import check_lambda, check_points
from .exceptions import DomainError, SingularityError

EIN_SWITCH = 12.0
MIN_RADIUS = 1e-8
_N_SERIES = 110
_SMALL_SIGMA = 1.0


def ein(s):
    """Entire exponential integral ``Ein(s) = int_0^s (1 - e^-t)/t dt``.

    Below ``EIN_SWITCH`` the series ``e^-s sum_n H_n s^n / n!`` (harmonic
    numbers ``H_n``) is used; it has positive terms, so it does not suffer
    the cancellation of the alternating Taylor series.  Above the switch,
    ``log s + euler_gamma + E1(s)``.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(~np.isfinite(s_arr)):
        raise DomainError("ein is defined for finite s >= 0")
    out = np.empty_like(s_arr)
    small = s_arr < EIN_SWITCH
    if np.any(small):
        out[small] = _ein_series(s_arr[small])
    big = ~small
    if np.any(big):
        sb = s_arr[big]
        out[big] = np.log(sb) + np.euler_gamma + exp1(sb)
    return out if out.ndim else float(out)


def _ein_series(s):
    term = np.ones_like(s)
    harmonic = 0.0
    total = np.zeros_like(s)
    for n in range(1, _N_SERIES):
        term = term * s / n
        harmonic += 1.0 / n
        total += harmonic * term
    return np.exp(-s) * total


def _ein_derivatives(sigma):
    """First three derivatives of Ein at ``sigma >= 0``."""
    sigma = np.asarray(sigma, dtype=float)
    d1 = np.empty_like(sigma)
    d2 = np.empty_like(sigma)
    d3 = np.empty_like(sigma)
    small = sigma < _SMALL_SIGMA
    if np.any(small):
        z = sigma[small]
        # Ein'(z) = sum_n (-z)^n / (n+1)!, differentiated termwise
        a1 = np.zeros_like(z)
        a2 = np.zeros_like(z)
        a3 = np.zeros_like(z)
        fact = 1.0
        for n in range(0, 30):
            fact *= n + 1
            c = (-1.0) ** n / fact
            a1 += c * z**n
            if n >= 1:
                a2 += c * n * z ** (n - 1)
            if n >= 2:
                a3 += c * n * (n - 1) * z ** (n - 2)
        d1[small], d2[small], d3[small] = a1, a2, a3
    big = ~small
    if np.any(big):
        z = sigma[big]
        e = np.exp(-z)
        d1[big] = -np.expm1(-z) / z
        d2[big] = (e * (1.0 + z) - 1.0) / z**2
        d3[big] = (2.0 - e * (z * z + 2.0 * z + 2.0)) / z**3
    return d1, d2, d3


def _sigma_derivatives(x, lam):
    """``sigma`` and its first three derivatives as broadcastable arrays."""
    r = np.linalg.norm(x, axis=-1)
    _check_off_origin(r)
    al = abs(lam)
    sigma = np.maximum(0.5 * (al * r + lam * x[..., 0]), 0.0)
    xh = x / r[..., None]
    e1 = np.array([1.0, 0.0, 0.0])
    eye = np.eye(3)
    g = 0.5 * (al * xh + lam * e1)
    proj = eye - xh[..., :, None] * xh[..., None, :]
    h = 0.5 * al * proj / r[..., None, None]
    # d_m (delta_jl / r - x_j x_l / r^3)
    xxx = xh[..., :, None, None] * xh[..., None, :, None] * xh[..., None, None, :]
    sym = (
        eye[:, :, None] * xh[..., None, None, :]
        + eye[:, None, :] * xh[..., None, :, None]
        + eye[None, :, :] * xh[..., :, None, None]
    )
    t3 = 0.5 * al * (3.0 * xxx - sym) / (r**2)[..., None, None, None]
    return r, sigma, g, h, t3


def _check_off_origin(r):
    if np.any(r < MIN_RADIUS):
        raise SingularityError(f"the steady kernel is singular at x = 0 (|x| < {MIN_RADIUS})")


def potential_derivatives(x, lam):
    """Second and third derivative tensors of ``psi = Ein(sigma)``.

    Returns ``(H, T)`` with ``H[..., j, l] = d_j d_l psi`` and
    ``T[..., m, j, l] = d_m d_j d_l psi``.
    """
    lam = check_lambda(lam)
    x = check_points(x)
    r, sigma, g, h, t3 = _sigma_derivatives(x, lam)
    d1, d2, d3 = _ein_derivatives(sigma)
    gg = g[..., :, None] * g[..., None, :]
    hess = d2[..., None, None] * gg + d1[..., None, None] * h
    ggg = gg[..., :, :, None] * g[..., None, None, :]
    # symmetrized h_jl g_m
    hg = (
        h[..., :, :, None] * g[..., None, None, :]
        + h[..., :, None, :] * g[..., None, :, None]
        + h[..., None, :, :] * g[..., :, None, None]
    )
    third = d3[..., None, None, None] * ggg + d2[..., None, None, None] * hg + d1[..., None, None, None] * t3
    return hess, third


def gamma0(x, lam):
    """Steady Oseen velocity tensor ``Gamma0(x)`` of shape ``(..., 3, 3)``.

    Raises :class:`SingularityError` for ``|x| < 1e-8``.
    """
    lam = check_lambda(lam)
    hess, _ = potential_derivatives(x, lam)
    lap = np.trace(hess, axis1=-2, axis2=-1)
    return (lap[..., None, None] * np.eye(3) - hess) / (4.0 * np.pi * abs(lam))


def grad_gamma0(x, lam):
    """Gradient ``G[..., m, j, l] = d_m Gamma0_jl(x)``."""
    lam = check_lambda(lam)
    _, third = potential_derivatives(x, lam)
    dlap = np.trace(third, axis1=-2, axis2=-1)
    return (dlap[..., :, None, None] * np.eye(3) - third) / (4.0 * np.pi * abs(lam))


def pressure0(x):
    """Steady pressure fundamental solution ``x_j / (4 pi |x|^3)``."""
    x = check_points(x)
    r = np.linalg.norm(x, axis=-1)
    _check_off_origin(r)
    return x / (4.0 * np.pi * r[..., None] ** 3)


@dataclass(frozen=True)
class FundSolTensor:
    """Sample of a fundamental-solution tensor at one point."""

    x: np.ndarray
    value: np.ndarray
    gradient: np.ndarray = None

    def to_dict(self):
        out = {"point": self.x.tolist(), "value": self.value.tolist()}
        if self.gradient is not None:
            out["gradient"] = self.gradient.tolist()
        return out


def evaluate_gamma0(x, lam, grad=False):
    x = check_points(x)
    g = grad_gamma0(x, lam) if grad else None
    return FundSolTensor(x, gamma0(x, lam), g)


def gamma0_norm(x, lam):
    """Frobenius norm ``|Gamma0(x)|`` from scalar invariants.

    With ``H = a g g^T + b Q`` the Hessian of the potential (``Q`` the
    projector orthogonal to ``x``), ``|tr(H) I - H|^2 = tr(H)^2 + |H|^2``.
    """
    lam = check_lambda(lam)
    x = check_points(x)
    al = abs(lam)
    r = np.linalg.norm(x, axis=-1)
    _check_off_origin(r)
    c = np.clip(np.sign(lam) * x[..., 0] / r, -1.0, 1.0)
    sigma = 0.5 * al * r * (1.0 + c)
    d1, d2, _ = _ein_derivatives(sigma)
    a = d2
    b = d1 * al / (2.0 * r)
    g2 = al**2 * (1.0 + c) / 2.0
    gqg = al**2 * (1.0 + c) * (1.0 - c) / 4.0
    tr = a * g2 + 2.0 * b
    h2 = a * a * g2 * g2 + 2.0 * a * b * gqg + 2.0 * b * b
    return np.sqrt(tr * tr + h2) / (4.0 * np.pi * al)


def grad_gamma0_norm_exact(x, lam, chunk=200_000):
    """Frobenius norm of ``grad Gamma0`` by direct evaluation, in chunks."""
    x = check_points(x)
    flat = x.reshape(-1, 3)
    out = np.empty(flat.shape[0])
    for i in range(0, flat.shape[0], chunk):
        g = grad_gamma0(flat[i : i + chunk], lam)
        out[i : i + chunk] = np.sqrt((g**2).sum(axis=(-3, -2, -1)))
    return out.reshape(x.shape[:-1])


class GradNormTable:
    """Spline of ``(|x|^2 |grad Gamma0(x)|)^2`` for fast repeated evaluation.

    The norm depends on ``|x|`` and the wake function only.  The lattice
    uses ``log |x|`` and ``v = log(1 + s) / log(1 + 2 |lam| |x|)``, which
    resolves the parabolic wake at every radius.  The squared norm is
    interpolated because it is smooth in ``s`` while the norm itself has a
    square-root layer at the wake axis.
    """

    def __init__(self, lam, r_min=1e-4, r_max=1e6, n_r=241, n_v=161):
        from scipy.interpolate import RectBivariateSpline

        self.lam = check_lambda(lam)
        self.r_min, self.r_max = r_min, r_max
        lr = np.linspace(np.log(r_min), np.log(r_max), n_r)
        v = np.linspace(0.0, 1.0, n_v)
        R, V = np.meshgrid(np.exp(lr), v, indexing="ij")
        x = self._points(R, V)
        vals = (R**2 * grad_gamma0_norm_exact(x, self.lam)) ** 2
        self._spline = RectBivariateSpline(lr, v, vals, kx=3, ky=3)

    def _points(self, r, v):
        al = abs(self.lam)
        s = np.expm1(v * np.log1p(2.0 * al * r)) / al
        c = np.clip(s / r - 1.0, -1.0, 1.0)
        x1 = np.sign(self.lam) * c * r
        b = r * np.sqrt(np.maximum(1.0 - c * c, 0.0))
        return np.stack([x1, b, np.zeros_like(b)], axis=-1)

    def __call__(self, x):
        x = check_points(x)
        al = abs(self.lam)
        r = np.linalg.norm(x, axis=-1)
        _check_off_origin(r)
        s = al * r + self.lam * x[..., 0]
        v = np.log1p(np.maximum(s, 0.0)) / np.log1p(2.0 * al * r)
        rc = np.clip(r, self.r_min, self.r_max)
        sq = self._spline.ev(np.log(rc), np.clip(v, 0.0, 1.0))
        return np.sqrt(np.maximum(sq, 0.0)) / r**2

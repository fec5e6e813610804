"""Purely periodic Oseen fundamental solution and its symbol.

Time mode ``k`` of the kernel is the inverse spatial transform of

    m_k(xi) = (1 - delta_k0) P(xi) / (|xi|^2 + i (w_k - lambda xi_1)),

``P = I - xi xi^T / |xi|^2``, with ``P(0) = I``.  Three evaluators are
provided:

* ``gamma_perp_modes``: a point oracle using windowed spherical quadrature
  of the full symbol (no closed forms involved);
* ``synthesize_gamma_perp``: grid samples for all modes at once.  A screened
  Stokes reference with closed-form inverse is subtracted so the FFT only
  sees an ``O(|xi|^-4)`` remainder;
* ``synthesize_gamma0``: the same construction for the steady symbol, whose
  singularity at ``xi = 0`` is integrated by quadrature instead of on the
  periodic lattice.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from . import fourier_quad as fq
from ._radial import screened_reference
from ._validation import check_int, check_lambda, check_points, check_positive
from .exceptions import AccuracyError, DomainError, NyquistError, SingularityError
from .steady import gamma0
from .torus import Grid, TorusField

ORACLE_MIN_RADIUS = 0.5
DEFAULT_MODES = 8
DEFAULT_TAPER = 0.1
# integral of 1/|x| over the unit cube centred at the origin
_CUBE_INV_R = 3.0 * np.log(2.0 + np.sqrt(3.0)) - np.pi / 2.0


def omega(k, period):
    return 2.0 * np.pi * k / period


def denominator(k, xi, lam, period):
    """``|xi|^2 + i (2 pi k / T - lambda xi_1)``."""
    xi = np.asarray(xi, dtype=float)
    return np.sum(xi**2, axis=-1) + 1j * (omega(k, period) - lam * xi[..., 0])


def projector(xi):
    """``I - xi xi^T / |xi|^2``, equal to ``I`` at ``xi = 0``."""
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(xi**2, axis=-1)
    safe = np.where(r2 > 0, r2, 1.0)
    outer = xi[..., :, None] * xi[..., None, :] / safe[..., None, None]
    outer = np.where((r2 > 0)[..., None, None], outer, 0.0)
    return np.eye(3) - outer


def symbol(k, xi, lam, period, mask_zero_mode=True):
    """Symbol of the time-mode-``k`` kernel at frequencies ``xi`` (..., 3).

    With ``mask_zero_mode`` the ``k = 0`` symbol is the zero matrix (purely
    periodic kernel).  Without it the steady symbol is returned, which is
    singular at ``xi = 0``.
    """
    lam = check_lambda(lam)
    check_positive(period, "period")
    xi = np.asarray(xi, dtype=float)
    if k == 0 and mask_zero_mode:
        return np.zeros(xi.shape[:-1] + (3, 3), dtype=complex)
    d = denominator(k, xi, lam, period)
    if np.any(d == 0):
        raise SingularityError("the symbol is singular at (k, xi) = (0, 0)")
    return projector(xi) / d[..., None, None]


@dataclass(frozen=True)
class OseenSymbol:
    k: int
    xi: np.ndarray
    lam: float
    period: float

    def denominator(self):
        return denominator(self.k, self.xi, self.lam, self.period)

    def matrix(self, mask_zero_mode=True):
        return symbol(self.k, self.xi, self.lam, self.period, mask_zero_mode)


# ---------------------------------------------------------------------------
# point oracle


def _mode_list(modes, period):
    ks = np.asarray(modes, dtype=int)
    if np.any(ks == 0):
        raise DomainError("the purely periodic kernel has no k = 0 mode")
    return ks, omega(ks, period)


def near_real_poles(lam, oms, r, reach=40.0):
    """Largest real part among symbol poles in ``|xi|`` (for ``xi_1 = +-|xi|``)
    whose distance to the real axis is below ``reach / r``."""
    best = 0.0
    for om in np.atleast_1d(oms):
        for c in (1.0, -1.0):
            disc = np.sqrt(complex(-(lam * c) ** 2 - 4j * om))
            for root in ((1j * lam * c + disc) / 2, (1j * lam * c - disc) / 2):
                if abs(root.imag) < reach / r:
                    best = max(best, abs(root.real) + 3.0 * abs(root.imag))
    return best


def _oracle_pass(x, lam, oms, grad, refine, scale):
    r = float(np.linalg.norm(x))
    feature = min(1.0, abs(lam), float(np.sqrt(np.min(np.abs(oms)))))
    flat = near_real_poles(lam, oms, r)
    nodes = fq.windowed_nodes(r, refine=refine, scale=scale, feature=feature, flat=flat)
    rho2 = nodes.rho**2
    xi1 = nodes.rho * nodes.c
    A = 1.0 / (rho2[:, None] + 1j * (oms[None, :] - lam * xi1[:, None]))
    x1, b, alpha = fq.frame_coordinates(x)
    R = fq.rotations(alpha)
    monos, I = fq.monomial_integrals(x1, b, nodes, A, max_degree=2)
    value = fq.rotate2(R, fq.assemble_projector(monos, I[0]))
    gvalue = None
    if grad:
        monos3, I3 = fq.monomial_integrals(x1, b, nodes, 1j * nodes.rho[:, None] * A, max_degree=3)
        gvalue = fq.rotate3(R, fq.assemble_grad_projector(monos3, I3[0]))
    return value, gvalue


def gamma_perp_modes(x, lam, period, modes, grad=False, tol=1e-6, max_refine=3):
    """Complex mode tensors ``Gamma_k(x)`` for each ``k`` in ``modes``.

    Returns ``(values, grads, err)``: ``values`` has shape ``(len(modes), 3,
    3)``, ``grads`` ``(len(modes), 3, 3, 3)`` or None, and ``err`` is the
    relative error estimate.  Two passes with different resolution and
    window width are compared; resolution is increased until the estimate
    drops below ``tol``.
    """
    lam = check_lambda(lam)
    check_positive(period, "period")
    x = check_points(x)
    if x.shape != (3,):
        raise DomainError("gamma_perp_modes evaluates one point at a time")
    r = float(np.linalg.norm(x))
    if r < ORACLE_MIN_RADIUS:
        raise DomainError(f"oracle requires |x| >= {ORACLE_MIN_RADIUS}, got {r:.3g}")
    _, oms = _mode_list(modes, period)
    prev = _oracle_pass(x, lam, oms, grad, 1.0, fq.WINDOW_SCALE)
    err = np.inf
    for level in range(1, max_refine + 1):
        cur = _oracle_pass(x, lam, oms, grad, 1.5**level, fq.WINDOW_SCALE + 2.0 * level)
        err = _rel_diff(prev, cur)
        prev = cur
        if err <= tol:
            return cur[0], cur[1], err
    raise AccuracyError(
        f"oracle estimate {err:.2e} above tol {tol:.2e} at |x| = {r:.3g}", achieved=err, value=prev
    )


def _rel_diff(a, b):
    num = np.max(np.abs(a[0] - b[0]))
    den = np.max(np.abs(b[0]))
    if a[1] is not None:
        num_g = np.max(np.abs(a[1] - b[1]))
        den_g = np.max(np.abs(b[1]))
        return max(num / den, num_g / den_g)
    return num / den


def _synthesize_time(values, oms, t):
    """``sum_k 2 Re(values_k exp(i w_k t))`` for positive modes."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phase = np.exp(1j * np.outer(t, oms))
    out = 2.0 * np.tensordot(phase, values, axes=(1, 0)).real
    return out


def gamma_perp_point_oracle(t, x, lam, period, K_modes=DEFAULT_MODES, tol=1e-6, grad=False):
    """Real tensor ``Gamma_perp(t, x)`` truncated to ``|k| <= K_modes``.

    ``t`` may be a scalar or array; the result has a leading time axis in
    the latter case.  With ``grad=True`` a pair ``(value, gradient)`` is
    returned.
    """
    K_modes = check_int(K_modes, "K_modes")
    ks = np.arange(1, K_modes + 1)
    vals, grads, _ = gamma_perp_modes(x, lam, period, ks, grad=grad, tol=tol)
    oms = omega(ks, period)
    v = _synthesize_time(vals, oms, t)
    g = _synthesize_time(grads, oms, t) if grad else None
    if np.ndim(t) == 0:
        v = v[0]
        g = g[0] if grad else None
    return (v, g) if grad else v


def time_norm(mode_values):
    """``L^2`` norm over the period (normalized measure) of the real kernel
    built from positive-mode tensors, via Parseval."""
    a = np.abs(mode_values) ** 2
    return float(np.sqrt(2.0 * a.sum()))


def time_lr_norm(mode_values, period, r=2.0, n_t=64):
    """``L^r`` norm over the period by sampling the synthesized kernel."""
    k = mode_values.shape[0]
    oms = omega(np.arange(1, k + 1), period)
    t = np.arange(n_t) * period / n_t
    vals = _synthesize_time(mode_values, oms, t)
    mag = np.sqrt(np.sum(vals.reshape(n_t, -1) ** 2, axis=1))
    return float(np.mean(mag**r) ** (1.0 / r))


# ---------------------------------------------------------------------------
# grid synthesis


def smooth_step(x, lo, hi):
    """C-infinity step: 1 for ``x <= lo``, 0 for ``x >= hi``."""
    t = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return b / (a + b)


def nyquist_taper(rho, h, fraction=DEFAULT_TAPER):
    rho_n = np.pi / h
    if fraction <= 0:
        return (rho <= rho_n).astype(float)
    return smooth_step(rho, (1.0 - fraction) * rho_n, rho_n)


def _origin_cell_average(h, mu):
    """Cell average of the screened reference over the cube at the origin.

    The reference behaves like the Stokeslet ``(I + x^x^)/(8 pi r)`` minus
    ``mu I / (6 pi)`` near the origin; odd terms average out.
    """
    stokeslet = (4.0 / 3.0) / (8.0 * np.pi) * _CUBE_INV_R / h
    return (stokeslet - mu / (6.0 * np.pi)) * np.eye(3)


def _reference_on_points(points, mu, lam, h):
    r = np.linalg.norm(points, axis=-1)
    out = np.empty(points.shape[:-1] + (3, 3), dtype=complex)
    off = r > 1e-12
    out[off] = screened_reference(points[off], mu, lam)
    out[~off] = _origin_cell_average(h, mu)
    return out


def _remainder_fft(grid, scal, workers=None):
    """Inverse transform of ``scal(xi) P(xi)`` on the grid (full box)."""
    K = grid.wavevectors(sparse=True)
    rho2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    inv = np.where(rho2 > 0, 1.0 / np.where(rho2 > 0, rho2, 1.0), 0.0)
    sign = grid.sign_lattice()
    n = grid.n_space
    out = np.empty((n, n, n, 3, 3), dtype=complex)
    for j in range(3):
        for l in range(j, 3):
            sym = scal * ((1.0 if j == l else 0.0) - K[j] * K[l] * inv)
            v = sfft.ifftn(sym * sign, workers=workers) / grid.h**3
            out[..., j, l] = v
            out[..., l, j] = v
    return out


@dataclass(frozen=True, eq=False)
class GammaPerpTable:
    """Per-mode grid samples ``Gamma_k(x)`` for ``k = 1..K``.

    Negative modes are conjugates; the ``k = 0`` slice is identically zero.
    """

    grid: Grid
    lam: float
    period: float
    modes: np.ndarray  # (K, n, n, n, 3, 3) complex
    error_estimate: float
    meta: dict = field(default_factory=dict)

    @property
    def K(self):
        return self.modes.shape[0]

    @property
    def omegas(self):
        return omega(np.arange(1, self.K + 1), self.period)

    def mode(self, k):
        if k == 0:
            return np.zeros(self.modes.shape[1:], dtype=complex)
        if abs(k) > self.K:
            raise NyquistError(f"mode {k} not synthesized (K = {self.K})")
        m = self.modes[abs(k) - 1]
        return m if k > 0 else np.conj(m)

    def at_time(self, t):
        """Real samples ``Gamma_perp(t, x)`` on the spatial grid."""
        phase = np.exp(1j * self.omegas * t)
        return 2.0 * np.tensordot(phase, self.modes, axes=(0, 0)).real

    def time_mean(self):
        """Mean over the time grid; zero up to rounding."""
        g = self.grid
        return np.mean([self.at_time(t) for t in g.times], axis=0)

    def to_torus_field(self):
        g = self.grid
        vals = np.stack([self.at_time(t).reshape(g.shape[1:] + (9,)) for t in g.times])
        return TorusField(g, vals, meta={"lambda": self.lam, "period": self.period, "K": self.K})

    def mode_interpolator(self, k):
        x = self.grid.x
        m = self.mode(k).reshape(x.size, x.size, x.size, 9)
        re = RegularGridInterpolator((x, x, x), m.real, bounds_error=True)
        im = RegularGridInterpolator((x, x, x), m.imag, bounds_error=True)
        return lambda p: (re(p) + 1j * im(p)).reshape(np.shape(p)[:-1] + (3, 3))

    def interpolate(self, t, x):
        """Trilinear interpolation in space, exact mode sum in time."""
        x = check_points(x)
        acc = 0.0
        for k in range(1, self.K + 1):
            acc = acc + 2.0 * (self.mode_interpolator(k)(x) * np.exp(1j * omega(k, self.period) * t)).real
        return acc

    def lq_norm(self, q, radius=None):
        """Grid ``L^q(T x B)`` norm of the synthesized kernel (origin excluded)."""
        g = self.grid
        pts = g.points()
        r = np.linalg.norm(pts, axis=-1)
        keep = r > 0 if radius is None else (r > 0) & (r <= radius)
        total = 0.0
        for t in g.times:
            mag = np.sqrt(np.sum(self.at_time(t) ** 2, axis=(-2, -1)))
            total += np.sum(mag[keep] ** q)
        return float((total * g.h**3 / g.n_time) ** (1.0 / q))


def synthesize_gamma_perp(grid, lam, period=None, K_modes=DEFAULT_MODES, taper=DEFAULT_TAPER, workers=None):
    """Grid samples of the purely periodic kernel for ``k = 1..K_modes``.

    Per mode the symbol is split as ``m_k = R_k + (m_k - R_k)`` where ``R_k``
    is the screened Stokes reference with ``mu_k^2 = i w_k``; ``R_k`` is
    evaluated in closed form, the remainder (``O(|xi|^-4)``) by FFT with a
    smooth taper over the top ``taper`` fraction of the Nyquist band.  The
    origin sample is the cell average of the singular reference.
    """
    lam = check_lambda(lam)
    period = grid.period if period is None else check_positive(period, "period")
    K_modes = check_int(K_modes, "K_modes")
    if K_modes > grid.n_time // 2:
        raise NyquistError(f"K_modes = {K_modes} exceeds n_time / 2 = {grid.n_time // 2}")
    t0 = time.perf_counter()
    K = grid.wavevectors(sparse=True)
    rho2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    rho = np.sqrt(rho2)
    tap = nyquist_taper(rho, grid.h, taper)
    pts = grid.points()
    n = grid.n_space
    modes = np.empty((K_modes, n, n, n, 3, 3), dtype=complex)
    err = 0.0
    rho_n = np.pi / grid.h
    dxi3 = (grid.dxi / (2 * np.pi)) ** 3
    for idx, k in enumerate(range(1, K_modes + 1)):
        om = omega(k, period)
        mu = np.sqrt(1j * om)
        d = rho2 + mu**2
        rem = 1.0 / (rho2 + 1j * (om - lam * K[0])) - (1.0 / d + 1j * lam * K[0] / d**2)
        modes[idx] = _remainder_fft(grid, rem * tap, workers) + _reference_on_points(pts, mu, lam, grid.h)
        # pointwise bound on the discarded remainder: tapered lattice part
        # plus the tail beyond the band, using |rem| <= c / rho^4
        c_tail = np.max(np.abs(rem[rho > 0.5 * rho_n]) * rho[rho > 0.5 * rho_n] ** 4)
        tail = 4.0 * np.pi * c_tail / rho_n / (2 * np.pi) ** 3
        err = max(err, 2.0 * (np.sum(np.abs(rem) * (1.0 - tap)) * dxi3 + tail))
    meta = {"taper": taper, "seconds": time.perf_counter() - t0}
    return GammaPerpTable(grid, lam, period, modes, float(err), meta)


# ---------------------------------------------------------------------------
# steady symbol on the grid (dual route to the closed form)

MODE0_BAND = (0.25, 1.0)
MODE0_MU = 1.0


def _low_frequency_nodes(lam, rho_max, r_max, n_gl=6):
    """Nodes for ``|xi| <= rho_max`` resolving the ``xi_1 / |xi|^2``
    singularity at the origin and phases up to ``rho_max r_max``."""
    edges = np.unique(np.concatenate([[0.0], rho_max * 2.0 ** -np.arange(40, 0, -1), np.linspace(rho_max / 2, rho_max, 9)[1:]]))
    rn, rw = fq.gauss_panels(edges, 8)
    R, C, S, W = [], [], [], []
    for ri, wi in zip(rn, rw):
        n_pan = int(np.ceil(ri * r_max / 3.0)) + 3
        # boundary layer of width |xi| / |lambda| around xi_1 = 0
        bl = ri / abs(lam) * 10.0 ** np.arange(-4, 2)
        bl = bl[bl < 1]
        extra = np.pi / 2 + np.concatenate([-np.arcsin(bl), np.arcsin(bl), [0.0]])
        e = np.unique(np.concatenate([np.linspace(0, np.pi, n_pan + 1), extra]))
        th, tw = fq.gauss_panels(e, n_gl)
        R.append(np.full(th.size, ri))
        C.append(np.cos(th))
        S.append(np.sin(th))
        W.append(fq.FOURIER_NORM * wi * ri**2 * tw * np.sin(th))
    return fq.NodeSet(*(np.concatenate(a) for a in (R, C, S, W)))


def synthesize_gamma0(grid, lam, half_box=True, band=MODE0_BAND, mu=MODE0_MU, b_step=0.4, workers=None):
    """Steady kernel on the grid from its symbol, independent of the closed form.

    The steady symbol is split with a smooth cutoff ``chi`` supported in
    ``|xi| <= band[1]``:

    * ``chi (m_0 - R)`` is integrated by spherical quadrature over the
      continuum (it carries the ``xi = 0`` singularity and the long range);
    * ``(1 - chi)(m_0 - R)`` is smooth and ``O(|xi|^-4)``; it goes through the
      periodic FFT;
    * ``R`` is the screened Stokes reference in closed form.

    Returns ``(x, T)`` with the 1D coordinates of the (half) box and the
    tensor samples of shape ``(n, n, n, 3, 3)``.
    """
    lam = check_lambda(lam)
    K = grid.wavevectors(sparse=True)
    rho2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    rho = np.sqrt(rho2)
    chi = smooth_step(rho, *band)
    d = rho2 + mu**2
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = 1.0 / (rho2 - 1j * lam * K[0])
    scal = (1.0 - chi) * (m0 - (1.0 / d + 1j * lam * K[0] / d**2))
    scal[0, 0, 0] = 0.0
    full = _remainder_fft(grid, scal, workers).real
    x = grid.x
    sel = np.abs(x) <= grid.box_half_length / 2 + 1e-9 if half_box else np.ones(x.size, bool)
    xs = x[sel]
    T = full[np.ix_(sel, sel, sel)]
    del full
    pts = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)
    T = T + _reference_on_points(pts, mu, lam, grid.h).real
    # low-frequency part on an (x1, b) table, cubic in b
    b_all = np.hypot(pts[..., 1], pts[..., 2])
    r_max = float(np.max(np.linalg.norm(pts, axis=-1)))
    nodes = _low_frequency_nodes(lam, band[1], r_max)
    nr, xr = nodes.rho, nodes.rho * nodes.c
    A = smooth_step(nr, *band) * (1.0 / (nr**2 - 1j * lam * xr) - (1.0 / (nr**2 + mu**2) + 1j * lam * xr / (nr**2 + mu**2) ** 2))
    bgrid = np.arange(0.0, b_all.max() + 2 * b_step, b_step)
    X1, B = np.meshgrid(xs, bgrid, indexing="ij")
    monos, I = fq.monomial_integrals(X1.ravel(), B.ravel(), nodes, A, max_degree=2)
    frame = fq.assemble_projector(monos, I[:, 0]).real.reshape(xs.size, bgrid.size, 3, 3)
    low = np.empty_like(T)
    for i in range(xs.size):
        low[i] = CubicSpline(bgrid, frame[i], axis=0)(b_all[i])
    alpha = np.arctan2(pts[..., 2], pts[..., 1])
    T = T + fq.rotate2(fq.rotations(alpha), low)
    return xs, T


def mode0_cross_check(lam, n_space=128, box_half_length=40.0, workers=None):
    """Relative L2 difference between the grid synthesis of the steady symbol
    and the closed-form kernel on the half box (origin excluded)."""
    grid = Grid(n_time=1, n_space=n_space, box_half_length=box_half_length)
    xs, T = synthesize_gamma0(grid, lam, workers=workers)
    pts = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)
    r = np.linalg.norm(pts, axis=-1)
    mask = r > 0
    G = gamma0(pts[mask], lam)
    diff = T[mask] - G
    return float(np.sqrt(np.sum(diff**2) / np.sum(G**2)))


# ---------------------------------------------------------------------------
# composite kernel


def gamma_tp(t, x, lam, period, backend="oracle", table=None, K_modes=DEFAULT_MODES, tol=1e-6):
    """``Gamma0(x) + Gamma_perp(t, x)`` with the oracle or a synthesized table."""
    x = check_points(x)
    g0 = gamma0(x, lam)
    if backend == "oracle":
        return g0 + gamma_perp_point_oracle(t, x, lam, period, K_modes, tol)
    if backend == "table":
        if table is None:
            raise DomainError("table backend needs a GammaPerpTable")
        return g0 + table.interpolate(t, x)
    raise DomainError(f"unknown backend {backend!r}")

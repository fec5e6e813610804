"""Time-periodic Oseen solves on the grid torus.

The linear problem

    d_t u - Delta u - lambda d_1 u + grad p = f,   div u = 0

is diagonal in time-space Fourier modes: the Helmholtz projection of the
forcing is divided by ``i w_k + |xi|^2 - i lambda xi_1``, which vanishes
only at ``(k, xi) = (0, 0)``.  That coefficient of the forcing is removed
(the box cannot carry a net force) and the removed vector is recorded.
Nyquist modes, whose symmetric partner is not on the grid, are dropped.

The nonlinear problem is solved by Picard iteration on
``u = S(f - div(u (x) u))`` with ``S`` the linear solution operator; the
quadratic term is computed pseudo-spectrally with the 2/3 rule in space
and time.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ._validation import check_int, check_lambda, check_positive
from .exceptions import DivergenceError, DomainError, InvalidParameterError, ShapeError, SingularityError
from .periodic import omega
from .torus import Grid, TorusField, project_periodic, project_steady, spectral_divergence

log = logging.getLogger(__name__)

MEAN_POLICIES = ("subtract", "reject")


@dataclass(frozen=True)
class PicardOptions:
    max_iter: int = 50
    tol: float = 1e-10
    damping: float = 1.0

    def __post_init__(self):
        check_int(self.max_iter, "max_iter")
        check_positive(self.tol, "tol")
        if not 0.0 < float(self.damping) <= 1.0:
            raise InvalidParameterError(f"damping must lie in (0, 1], got {self.damping}")


@dataclass(frozen=True)
class SolveConfig:
    lam: float = 1.0
    period: float = 2 * np.pi
    grid: Grid = None
    picard: PicardOptions = field(default_factory=PicardOptions)
    mean_policy: str = "subtract"
    workers: int = None

    def __post_init__(self):
        check_lambda(self.lam)
        check_positive(self.period, "period")
        if self.grid is None:
            object.__setattr__(self, "grid", Grid(period=self.period))
        if abs(self.grid.period - self.period) > 1e-12 * self.period:
            raise InvalidParameterError("grid period and config period differ")
        if self.mean_policy not in MEAN_POLICIES:
            raise InvalidParameterError(f"mean_policy must be one of {MEAN_POLICIES}")


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    """Velocity, pressure, their time-mean split and the iteration record."""

    u: TorusField
    p: TorusField
    history: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def v(self):
        """Time mean ``P u``."""
        return project_steady(self.u)

    @property
    def w(self):
        """Purely periodic part ``u - P u``."""
        return project_periodic(self.u)

    def divergence(self, workers=None):
        return spectral_divergence(self.u, workers)


# ---------------------------------------------------------------------------
# spectral helpers


def _time_coeffs(values):
    """Positive time coefficients (``rfft`` over the time axis, normalized)."""
    n_t = values.shape[0]
    return sfft.rfft(values, axis=0) / n_t


def _from_time_coeffs(c, n_t):
    return sfft.irfft(c * n_t, n=n_t, axis=0)


def _nyquist_mask(grid):
    n = grid.n_space
    m = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    ok = m != -(n // 2) if n % 2 == 0 else np.ones(n, dtype=bool)
    return ok[:, None, None] & ok[None, :, None] & ok[None, None, :]


def _dealias_mask(grid):
    n = grid.n_space
    m = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    ok = m < n / 3.0
    return ok[:, None, None] & ok[None, :, None] & ok[None, None, :]


def _time_modes(grid):
    return np.arange(grid.n_time // 2 + 1)


class LinearSolver:
    """Fourier multiplier for the linear time-periodic Oseen system."""

    def __init__(self, cfg: SolveConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        g = self.grid
        self.K = g.wavevectors(sparse=True)
        xi2 = self.K[0] ** 2 + self.K[1] ** 2 + self.K[2] ** 2
        self.xi2 = xi2
        self.xi2_safe = np.where(xi2 == 0, 1.0, xi2)
        self.space_ok = _nyquist_mask(g)

    def _project(self, F):
        """Helmholtz projection and pressure coefficient of one time mode."""
        K = self.K
        kf = K[0] * F[..., 0] + K[1] * F[..., 1] + K[2] * F[..., 2]
        P = np.stack([F[..., j] - K[j] * kf / self.xi2_safe for j in range(3)], axis=-1)
        q = -1j * kf / self.xi2_safe
        q[0, 0, 0] = 0.0
        return P, q

    def _mode_solve(self, k, F):
        """Solve for time mode ``k >= 0`` given spatial DFT ``F``."""
        cfg = self.cfg
        F = F * self.space_ok[..., None]
        P, q = self._project(F)
        d = self.xi2 + 1j * (omega(k, cfg.period) - cfg.lam * self.K[0])
        if k == 0:
            d = np.where(self.xi2 == 0, 1.0, d)
            P[0, 0, 0] = 0.0
        U = P / d[..., None]
        return U, q

    def solve_coeffs(self, c, workers=None):
        """Solve in time-coefficient space, ``c[k, i, j, l, comp]`` for ``k >= 0``.

        Returns velocity and pressure time coefficients and the removed mean.
        """
        g = self.grid
        n_t = g.n_time
        U = np.empty_like(c)
        Q = np.empty(c.shape[:-1], dtype=complex)
        removed = np.zeros(3)
        for k in range(c.shape[0]):
            if n_t % 2 == 0 and k == n_t // 2:
                U[k] = 0.0
                Q[k] = 0.0
                continue
            F = sfft.fftn(c[k], axes=(0, 1, 2), workers=workers)
            if k == 0:
                removed = F[0, 0, 0].real / g.n_space**3
            Uk, qk = self._mode_solve(k, F)
            U[k] = sfft.ifftn(Uk, axes=(0, 1, 2), workers=workers)
            Q[k] = sfft.ifftn(qk, axes=(0, 1, 2), workers=workers)
        return U, Q, removed

    def apply(self, values, workers=None):
        """Velocity and pressure samples for forcing samples ``values``."""
        c = _time_coeffs(values)
        U, Q, removed = self.solve_coeffs(c, workers)
        n_t = self.grid.n_time
        return _from_time_coeffs(U, n_t), _from_time_coeffs(Q, n_t), removed


def _check_force(f, grid):
    if not isinstance(f, TorusField):
        raise ShapeError("forcing must be a TorusField")
    if f.grid != grid:
        raise ShapeError("forcing grid differs from the solver grid")
    if f.n_components != 3:
        raise ShapeError("forcing must have 3 components")


def _mean_check(removed, f, policy):
    scale = max(float(np.max(np.abs(f.values))), 1e-300)
    if policy == "reject" and np.max(np.abs(removed)) > 1e-12 * scale:
        raise SingularityError(
            f"forcing has non-zero mean {removed.tolist()} at (k, xi) = (0, 0), "
            "where the symbol vanishes"
        )


def solve_linear(f: TorusField, cfg: SolveConfig = None, workers=None) -> SolutionBundle:
    """Decaying-in-frequency solution of the linear system on the torus."""
    cfg = SolveConfig(period=f.grid.period, grid=f.grid) if cfg is None else cfg
    _check_force(f, cfg.grid)
    workers = workers if workers is not None else cfg.workers
    u, p, removed = LinearSolver(cfg).apply(f.values, workers)
    _mean_check(removed, f, cfg.mean_policy)
    meta = {"mean_removed": [float(v) for v in removed], "lambda": cfg.lam, "kind": "linear"}
    U = TorusField(cfg.grid, u, divergence_free=True)
    return SolutionBundle(U, TorusField(cfg.grid, p), [], meta)


# ---------------------------------------------------------------------------
# derivatives and residuals


class SpectralOps:
    """Spectral derivatives of grid fields, one time sample at a time."""

    def __init__(self, grid, workers=None):
        self.grid = grid
        self.K = grid.wavevectors(sparse=True)
        self.workers = workers
        self.dealias = _dealias_mask(grid)
        self.nyq = _nyquist_mask(grid)

    def fft(self, a):
        return sfft.fftn(a, axes=(0, 1, 2), workers=self.workers)

    def ifft(self, a):
        return sfft.ifftn(a, axes=(0, 1, 2), workers=self.workers).real

    def gradient(self, u):
        """``G[..., m, j] = d_m u_j`` for one time sample ``u[..., j]``."""
        U = self.fft(u) * self.nyq[..., None]
        return np.stack([self.ifft(1j * self.K[m][..., None] * U) for m in range(3)], axis=-2)

    def convective(self, values, dealias=True):
        """``div(u (x) u)_j = d_m (u_m u_j)`` for all time samples."""
        n_t = values.shape[0]
        vals = values
        if dealias:
            vals = _dealias_time(values)
        out = np.empty_like(values)
        for n in range(n_t):
            u = vals[n]
            if dealias:
                u = self.ifft(self.fft(u) * self.dealias[..., None])
            acc = 0.0
            for m in range(3):
                prod = self.fft(u[..., m : m + 1] * u)
                acc = acc + 1j * self.K[m][..., None] * prod
            if dealias:
                acc = acc * self.dealias[..., None]
            out[n] = self.ifft(acc)
        if dealias:
            out = _dealias_time(out)
        return out

    def oseen_residual(self, u, p, f, lam):
        """Samples of ``d_t u - Delta u - lam d_1 u + grad p - f``."""
        g = self.grid
        c = _time_coeffs(u)
        k = _time_modes(g)[: c.shape[0]]
        dt = _from_time_coeffs(1j * omega(k, g.period)[:, None, None, None, None] * c, g.n_time)
        xi2 = self.K[0] ** 2 + self.K[1] ** 2 + self.K[2] ** 2
        out = np.empty_like(u)
        for n in range(g.n_time):
            U = self.fft(u[n])
            P = self.fft(p[n])
            R = (xi2[..., None] - 1j * lam * self.K[0][..., None]) * U
            R = R + np.stack([1j * self.K[j] * P for j in range(3)], axis=-1)
            out[n] = self.ifft(R) + dt[n] - f[n]
        return out


def _dealias_time(values):
    n_t = values.shape[0]
    c = sfft.rfft(values, axis=0)
    k = np.arange(c.shape[0])
    c[k >= n_t / 3.0] = 0.0
    return sfft.irfft(c, n=n_t, axis=0)


def linear_residual(bundle, f, lam, workers=None):
    """Grid ``L^2`` norm of the strong residual of the linear system.

    The forcing is taken as solved: its removed mean and Nyquist content
    are subtracted first.
    """
    g = f.grid
    ops = SpectralOps(g, workers)
    feff = effective_force(f, workers)
    r = ops.oseen_residual(bundle.u.values, bundle.p.values[..., 0], feff, lam)
    return TorusField(g, r).l2_norm()


def effective_force(f, workers=None):
    """``f`` without its ``(0, 0)`` coefficient, spatial and temporal Nyquist modes."""
    g = f.grid
    c = _time_coeffs(f.values)
    ok = _nyquist_mask(g)
    for k in range(c.shape[0]):
        if g.n_time % 2 == 0 and k == g.n_time // 2:
            c[k] = 0.0
            continue
        F = sfft.fftn(c[k], axes=(0, 1, 2), workers=workers) * ok[..., None]
        if k == 0:
            F[0, 0, 0] = 0.0
        c[k] = sfft.ifftn(F, axes=(0, 1, 2), workers=workers)
    return _from_time_coeffs(c, g.n_time)


# ---------------------------------------------------------------------------
# Picard iteration


def picard_solve(f, cfg: SolveConfig, u0=None, workers=None) -> SolutionBundle:
    """Fixed point of ``u = S(f - div(u (x) u))`` by damped Picard iteration.

    ``f`` is a :class:`TorusField` or any source with a ``sample(grid)``
    method.  ``history`` holds the grid norms of successive differences.
    Three consecutive increases raise :class:`DivergenceError`.
    """
    grid = cfg.grid
    if not isinstance(f, TorusField):
        f = f.sample(grid)
    _check_force(f, grid)
    workers = workers if workers is not None else cfg.workers
    opt = cfg.picard
    lin = LinearSolver(cfg)
    ops = SpectralOps(grid, workers)
    fv = f.values
    u = np.zeros_like(fv) if u0 is None else np.array(u0.values, copy=True)
    history = []
    growth = 0
    p = None
    removed = np.zeros(3)
    converged = False
    for it in range(opt.max_iter):
        rhs = fv - ops.convective(u) if it > 0 or u0 is not None else fv
        new, p, removed = lin.apply(rhs, workers)
        new = (1.0 - opt.damping) * u + opt.damping * new
        diff = TorusField(grid, new - u).l2_norm()
        history.append(diff)
        u = new
        log.debug("picard iteration %d: |du| = %.3e", it + 1, diff)
        if diff <= opt.tol:
            converged = True
            break
        if len(history) >= 2 and history[-1] > history[-2]:
            growth += 1
            if growth >= 3:
                raise DivergenceError(
                    "Picard iteration diverges (3 consecutive increases); reduce the data "
                    "amplitude or the damping",
                    history,
                )
        else:
            growth = 0
    _mean_check(removed, f, cfg.mean_policy)
    # fixed-point residual with the final iterate
    again, _, _ = lin.apply(fv - ops.convective(u), workers)
    fp_res = TorusField(grid, again - u).l2_norm()
    factors = [b / a for a, b in zip(history[:-1], history[1:]) if a > 0]
    meta = {
        "kind": "picard",
        "lambda": cfg.lam,
        "iterations": len(history),
        "converged": converged,
        "tol": cfg.picard.tol,
        "fixed_point_residual": fp_res,
        "contraction_factors": factors,
        "mean_removed": [float(v) for v in removed],
    }
    if not converged:
        log.warning("Picard iteration stopped after %d steps, |du| = %.3e", len(history), history[-1])
    return SolutionBundle(TorusField(grid, u, divergence_free=True), TorusField(grid, p), history, meta)


def contraction_factor(bundle):
    """Largest ratio of successive Picard differences (ignoring the first step)."""
    f = bundle.meta.get("contraction_factors", [])
    return max(f) if f else 0.0


# ---------------------------------------------------------------------------
# weak form


def weak_residual(u: TorusField, f: TorusField, trials, lam, nonlinear=True, workers=None, div_tol=1e-8):
    """``int_T int -u.d_t phi + grad u : grad phi - lam d_1 u.phi + (u.grad u).phi - f.phi``.

    The time integral uses the normalized measure.  Each trial field must
    be divergence free (spectral divergence at most ``div_tol`` times its
    maximum), otherwise :class:`DomainError` is raised.  With
    ``nonlinear=False`` the convective term is left out (linear system).
    """
    g = u.grid
    ops = SpectralOps(g, workers)
    conv = ops.convective(u.values) if nonlinear else None
    dt_weight = g.h**3 / g.n_time
    out = []
    for phi in trials:
        if phi.grid != g:
            raise ShapeError("trial field on a different grid")
        scale = max(phi.max_abs(), 1e-300)
        if spectral_divergence(phi, workers) > div_tol * scale * max(1.0, 1.0 / g.h):
            raise DomainError("trial field is not divergence free")
        c = _time_coeffs(phi.values)
        k = _time_modes(g)[: c.shape[0]]
        dphi = _from_time_coeffs(1j * omega(k, g.period)[:, None, None, None, None] * c, g.n_time)
        total = 0.0
        for n in range(g.n_time):
            un, pn = u.values[n], phi.values[n]
            gu = ops.gradient(un)
            gp = ops.gradient(pn)
            val = -np.sum(un * dphi[n]) + np.sum(gu * gp) - lam * np.sum(gu[..., 0, :] * pn)
            if nonlinear:
                val += np.sum(conv[n] * pn)
            val -= np.sum(f.values[n] * pn)
            total += val
        out.append(float(total * dt_weight))
    return out


def divergence_free_trials(grid, n, seed=0, width=4.0, spread=None):
    """Seeded smooth, compactly supported, divergence-free test fields.

    Each is the curl of a bump-shaped vector potential with random centre,
    orientation and time profile.
    """
    from .sources import bump

    rng = np.random.default_rng(seed)
    spread = 0.4 * grid.box_half_length if spread is None else spread
    pts = grid.points()
    ops = SpectralOps(grid)
    t = grid.times
    w = 2.0 * np.pi / grid.period
    out = []
    for _ in range(n):
        c = rng.uniform(-spread, spread, 3)
        a = rng.standard_normal(3)
        ph = rng.uniform(0, 2 * np.pi, 2)
        prof = 1.0 + 0.5 * np.cos(w * t + ph[0]) + 0.25 * np.sin(2 * w * t + ph[1])
        psi = bump(np.linalg.norm(pts - c, axis=-1) / width)[..., None] * a
        G = ops.gradient(psi)
        curl = np.stack([G[..., 1, 2] - G[..., 2, 1], G[..., 2, 0] - G[..., 0, 2], G[..., 0, 1] - G[..., 1, 0]], axis=-1)
        out.append(TorusField(grid, prof[:, None, None, None, None] * curl[None], divergence_free=True))
    return out


# ---------------------------------------------------------------------------
# symbol scan


@dataclass(frozen=True)
class SymbolScan:
    """Minimum of ``|i w_k + |xi|^2 - i lam xi_1|`` away from ``(0, 0)``."""

    minimum: float
    argmin: tuple
    zeros: list
    n_points: int
    passed: bool


def symbol_zero_scan(lam, period, ks, xi_1d):
    """Scan the Oseen symbol over modes ``ks`` and the lattice ``xi_1d^3``.

    ``zeros`` lists every scanned point where the symbol vanishes; only
    ``(0, 0)`` may appear.  The scan is exact on the finite set.
    """
    lam = check_lambda(lam)
    check_positive(period, "period")
    xi = np.asarray(xi_1d, dtype=float)
    X1, X2, X3 = np.meshgrid(xi, xi, xi, indexing="ij", sparse=True)
    xi2 = X1**2 + X2**2 + X3**2
    best = np.inf
    arg = None
    zeros = []
    for k in ks:
        w = 2.0 * np.pi * k / period
        mod = np.abs(xi2 + 1j * (w - lam * X1))
        mod = np.broadcast_to(mod, (xi.size,) * 3)
        zero_idx = np.argwhere(mod == 0.0)
        for i, j, l in zero_idx:
            zeros.append((int(k), float(xi[i]), float(xi[j]), float(xi[l])))
        masked = mod
        if k == 0:
            masked = np.where((xi2 == 0) & np.ones_like(mod, dtype=bool), np.inf, mod)
        m = float(masked.min())
        if m < best:
            best = m
            i, j, l = np.unravel_index(np.argmin(masked), masked.shape)
            arg = (int(k), float(xi[i]), float(xi[j]), float(xi[l]))
    only_origin = all(z[0] == 0 and z[1] == z[2] == z[3] == 0.0 for z in zeros)
    n = len(ks) * xi.size**3
    return SymbolScan(best, arg, zeros, n, bool(best > 0 and only_origin))


def grid_symbol_scan(grid, lam):
    """Scan over every time mode and wavevector of a solver grid."""
    ks = np.fft.fftfreq(grid.n_time, d=1.0 / grid.n_time).astype(int)
    return symbol_zero_scan(lam, grid.period, ks, grid.xi)


# ---------------------------------------------------------------------------
# whole-space linear solution on the grid

# mean of 1/|z| over the unit cube centred at the origin
CUBE_MEAN_INV_R = 3.0 * np.log(2.0 + np.sqrt(3.0)) - np.pi / 2.0


def _kernel_lattice(grid):
    """Offsets ``h m`` with ``m`` in FFT order on the doubled lattice."""
    n = grid.n_space
    m = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    z = grid.h * m
    Z = np.stack(np.meshgrid(z, z, z, indexing="ij"), axis=-1)
    return Z.reshape(-1, 3)


def _origin_weight(h):
    """Cell average of the Stokes singularity ``(I + zz/|z|^2) / (8 pi |z|)``."""
    return CUBE_MEAN_INV_R / (6.0 * np.pi * h) * np.eye(3)


def free_space_linear(f: TorusField, lam, table=None, workers=None, chunk=500_000):
    """Whole-space ``Gamma * f`` at the grid nodes by zero-padded FFT convolution.

    ``f`` is taken to vanish outside the box.  The time-mean kernel is the
    closed form; purely periodic modes use the tabulated mode tensors of
    ``table`` (same ``lambda`` and period).  The origin cell carries the
    cell average of the common Stokes singularity.  Unlike
    :func:`solve_linear` the result has no periodic images.
    """
    from .steady import gamma0

    lam = check_lambda(lam)
    g = f.grid
    n = g.n_space
    c = _time_coeffs(f.values)
    scale = max(np.max(np.abs(c)), 1e-300)
    ks = [k for k in range(c.shape[0]) if np.max(np.abs(c[k])) > 1e-14 * scale]
    if g.n_time % 2 == 0:
        ks = [k for k in ks if k != g.n_time // 2]
    if any(k > 0 for k in ks):
        if table is None:
            raise InvalidParameterError("periodic modes need a kernel table")
        if abs(table.lam - lam) > 1e-12 or abs(table.period - g.period) > 1e-12 * g.period:
            raise InvalidParameterError("kernel table has a different lambda or period")
        if max(ks) > table.K:
            raise InvalidParameterError(f"data carries time modes above the tabulated {table.K}")
    Z = _kernel_lattice(g)
    nz = np.linalg.norm(Z, axis=-1) > 0
    shape2 = (2 * n,) * 3
    out = np.zeros_like(c)
    for k in ks:
        K = np.zeros((Z.shape[0], 3, 3), dtype=complex)
        for a in range(0, Z.shape[0], chunk):
            sl = slice(a, a + chunk)
            zz, ok = Z[sl], nz[sl]
            if k == 0:
                K[sl][ok] = gamma0(zz[ok], lam)
            else:
                K[sl][ok] = table.mode_tensors(zz[ok], modes=[k])[:, 0]
        K[~nz] = _origin_weight(g.h)
        K = K.reshape(shape2 + (3, 3))
        F = [sfft.fftn(c[k][..., l], s=shape2, workers=workers) for l in range(3)]
        for j in range(3):
            acc = 0.0
            for l in range(3):
                acc = acc + sfft.fftn(K[..., j, l], workers=workers) * F[l]
            out[k][..., j] = sfft.ifftn(acc, workers=workers)[:n, :n, :n] * g.h**3
    return TorusField(g, _from_time_coeffs(out, g.n_time), meta={"kind": "free_space_linear"})

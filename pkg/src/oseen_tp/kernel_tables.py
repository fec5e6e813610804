"""Tabulated time norms of the purely periodic kernel.

``k0(z) = (1/T) int_0^T |Gamma_perp(t, z)| dt`` and the same for the
gradient are needed at arbitrary ``z`` when bounding convolutions with
``|Gamma_perp|``.  The kernel is axisymmetric about ``e_1``, so the norms
depend on ``|z|`` and the polar angle only.  They are computed on a
``(log r, angle)`` lattice with the quadrature oracle, which is slow, so
the lattice is cached on disk and a default table ships with the package.

Outside the tabulated radii the norms are continued by the local power
laws of the kernel: ``|z|^-1`` (value) and ``|z|^-2`` (gradient) towards
the origin, ``|z|^-3`` and ``|z|^-4`` at infinity.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import fourier_quad as fq
from ._validation import check_int, check_lambda, check_points, check_positive
from .exceptions import DomainError
from .periodic import _mode_list, near_real_poles

CACHE_ENV = "OSEEN_TP_CACHE"
DATA_DIR = Path(__file__).parent / "data"

INNER_POWER = (1.0, 2.0)
OUTER_POWER = (3.0, 4.0)


def ring_modes(r, angles, lam, period, K, refine=1.0, scale=fq.WINDOW_SCALE):
    """Mode tensors and gradients at ``r (cos a, sin a, 0)`` for all angles.

    All points share one radius, hence one node set.  Returns complex
    arrays of shape ``(n_angles, K, 3, 3)`` and ``(n_angles, K, 3, 3, 3)``.
    """
    _, oms = _mode_list(np.arange(1, K + 1), period)
    feature = min(1.0, abs(lam), float(np.sqrt(np.min(oms))))
    flat = near_real_poles(lam, oms, r)
    nodes = fq.windowed_nodes(r, refine=refine, scale=scale, feature=feature, flat=flat)
    rho2 = nodes.rho**2
    xi1 = nodes.rho * nodes.c
    A = 1.0 / (rho2[:, None] + 1j * (oms[None, :] - lam * xi1[:, None]))
    x1 = r * np.cos(angles)
    b = r * np.sin(angles)
    monos, I = fq.monomial_integrals(x1, b, nodes, A, max_degree=2)
    val = fq.assemble_projector(monos, I)
    monos3, I3 = fq.monomial_integrals(x1, b, nodes, 1j * nodes.rho[:, None] * A, max_degree=3)
    grad = fq.assemble_grad_projector(monos3, I3)
    return val, grad


def l1_time_norms(values, grads, period, n_t=128):
    """Time-averaged Frobenius norms from positive-mode tensors.

    ``values`` has shape ``(..., K, 3, 3)``; the mode axis is third from
    the end (fourth for ``grads``).
    """
    K = values.shape[-3]
    _, oms = _mode_list(np.arange(1, K + 1), period)
    t = np.arange(n_t) * period / n_t
    phase = np.exp(1j * np.outer(t, oms))
    v = 2.0 * np.einsum("tk,...kjl->...tjl", phase, values).real
    g = 2.0 * np.einsum("tk,...kmjl->...tmjl", phase, grads).real
    k0 = np.sqrt((v**2).sum(axis=(-2, -1))).mean(axis=-1)
    k1 = np.sqrt((g**2).sum(axis=(-3, -2, -1))).mean(axis=-1)
    return k0, k1


@dataclass(frozen=True, eq=False)
class TimeNormTable:
    """Time ``L^1`` norms of ``Gamma_perp`` and its gradient on a lattice.

    ``angles`` are polar angles measured from the wake axis.
    """

    lam: float
    period: float
    K: int
    radii: np.ndarray
    angles: np.ndarray
    value_norm: np.ndarray
    grad_norm: np.ndarray
    error: np.ndarray
    modes: np.ndarray = None
    grad_modes: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lr = np.log(self.radii)
        splines = tuple(
            RectBivariateSpline(
                lr, self.angles, np.log(tab), kx=min(3, lr.size - 1), ky=min(3, self.angles.size - 1)
            )
            for tab in (self.value_norm, self.grad_norm)
        )
        object.__setattr__(self, "_splines", splines)
        object.__setattr__(self, "_mode_splines", None)

    def __call__(self, z, grad=False):
        """Interpolated norm at points ``z`` of shape ``(..., 3)``."""
        z = check_points(z, "z")
        shape = z.shape[:-1]
        z = z.reshape(-1, 3)
        r = np.linalg.norm(z, axis=-1)
        ang = np.arctan2(np.hypot(z[:, 1], z[:, 2]), -np.sign(self.lam) * z[:, 0])
        i = int(bool(grad))
        r_lo, r_hi = self.radii[0], self.radii[-1]
        rc = np.clip(r, r_lo, r_hi)
        out = np.exp(self._splines[i].ev(np.log(rc), ang))
        with np.errstate(divide="ignore"):
            inner = np.where(r < r_lo, (r_lo / r) ** INNER_POWER[i], 1.0)
        outer = np.where(r > r_hi, (r_hi / np.maximum(r, r_hi)) ** OUTER_POWER[i], 1.0)
        return (out * inner * outer).reshape(shape)

    def _build_mode_splines(self):
        # splines of r^3 Gamma_k and r^4 grad Gamma_k in the frame
        lr = np.log(self.radii)
        out = []
        for arr, p in ((self.modes, 3.0), (self.grad_modes, 4.0)):
            scaled = arr * (self.radii**p).reshape((-1,) + (1,) * (arr.ndim - 1))
            flat = scaled.reshape(self.radii.size, self.angles.size, -1)
            sp = []
            for c in range(flat.shape[-1]):
                parts = [
                    RectBivariateSpline(lr, self.angles, part(flat[..., c]), kx=3, ky=3)
                    for part in (np.real, np.imag)
                ]
                sp.append(parts)
            out.append((sp, arr.shape[2:], p))
        object.__setattr__(self, "_mode_splines", out)

    def mode_tensors(self, z, grad=False, modes=None):
        """Interpolated ``Gamma_k(z)`` (or gradients) for ``k`` in ``modes``.

        ``modes`` defaults to ``1..K``.  Returns shape ``(n, len(modes), 3,
        3)`` or ``(n, len(modes), 3, 3, 3)`` for points of shape ``(n, 3)``
        with tabulated radii.
        """
        modes = np.arange(1, self.K + 1) if modes is None else np.asarray(modes, dtype=int)
        if np.any(modes < 1) or np.any(modes > self.K):
            raise DomainError(f"tabulated modes are 1..{self.K}")
        if self.modes is None:
            raise DomainError("this table carries no mode tensors")
        z = check_points(np.atleast_2d(z), "z")
        r = np.linalg.norm(z, axis=-1)
        if np.any(r < self.radii[0]) or np.any(r > self.radii[-1]):
            raise DomainError(
                f"mode tensors are tabulated for {self.radii[0]} <= |z| <= {self.radii[-1]}"
            )
        if self._mode_splines is None:
            self._build_mode_splines()
        sp, shape, p = self._mode_splines[int(bool(grad))]
        per = int(np.prod(shape[1:]))
        chosen = [sp[(k - 1) * per + c] for k in modes for c in range(per)]
        shape = (modes.size,) + shape[1:]
        x1, b, alpha = fq.frame_coordinates(z)
        ang = np.arctan2(b, -np.sign(self.lam) * x1)
        lr = np.log(r)
        vals = np.stack([s_re.ev(lr, ang) + 1j * s_im.ev(lr, ang) for s_re, s_im in chosen], axis=-1)
        vals = vals.reshape((z.shape[0],) + shape) / (r**p).reshape((-1,) + (1,) * len(shape))
        R = fq.rotations(alpha)[:, None]
        return fq.rotate3(R, vals) if grad else fq.rotate2(R, vals)

    def to_npz(self, path):
        extra = {}
        if self.modes is not None:
            extra = {"modes": self.modes, "grad_modes": self.grad_modes}
        np.savez_compressed(
            path,
            **extra,
            lam=self.lam,
            period=self.period,
            K=self.K,
            radii=self.radii,
            angles=self.angles,
            value_norm=self.value_norm,
            grad_norm=self.grad_norm,
            error=self.error,
            meta=json.dumps(self.meta, sort_keys=True),
        )

    @classmethod
    def from_npz(cls, path):
        d = np.load(path)
        return cls(
            float(d["lam"]),
            float(d["period"]),
            int(d["K"]),
            d["radii"],
            d["angles"],
            d["value_norm"],
            d["grad_norm"],
            d["error"],
            d["modes"] if "modes" in d else None,
            d["grad_modes"] if "grad_modes" in d else None,
            json.loads(str(d["meta"])),
        )


def default_radii():
    return np.geomspace(0.5, 160.0, 29)


def default_angles():
    return np.linspace(0.0, np.pi, 33)


def build_time_norm_table(lam=1.0, period=1.0, K=8, radii=None, angles=None, n_t=128, log=None):
    """Compute the table with the quadrature oracle.

    Angles are measured from the wake axis ``-sign(lam) e_1``.  Each radius
    is evaluated at two resolutions; ``error`` holds the relative change of
    the norms between them.
    """
    lam = check_lambda(lam)
    check_positive(period, "period")
    K = check_int(K, "K")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    angles = default_angles() if angles is None else np.asarray(angles, dtype=float)
    # oracle frame angle: polar angle from +e_1
    frame = np.pi - angles if lam > 0 else angles
    k0 = np.zeros((radii.size, angles.size))
    k1 = np.zeros_like(k0)
    err = np.zeros(radii.size)
    modes = np.zeros((radii.size, angles.size, K, 3, 3), dtype=complex)
    grad_modes = np.zeros((radii.size, angles.size, K, 3, 3, 3), dtype=complex)
    t0 = time.time()
    for i, r in enumerate(radii):
        coarse = l1_time_norms(*ring_modes(r, frame, lam, period, K, 1.0), period, n_t)
        modes[i], grad_modes[i] = ring_modes(r, frame, lam, period, K, 1.5, fq.WINDOW_SCALE + 2.0)
        fine = l1_time_norms(modes[i], grad_modes[i], period, n_t)
        k0[i], k1[i] = fine
        err[i] = max(np.max(np.abs(c - f) / f) for c, f in zip(coarse, fine))
        if log is not None:
            log(f"r={r:.4g} err={err[i]:.2e} elapsed={time.time() - t0:.0f}s")
    meta = {"n_t": n_t, "oracle_passes": [1.0, 1.5]}
    return TimeNormTable(lam, float(period), K, radii, angles, k0, k1, err, modes, grad_modes, meta)


def _table_key(lam, period, K):
    text = json.dumps({"lam": float(lam), "period": float(period), "K": int(K)}, sort_keys=True)
    return "time_norm_" + hashlib.sha1(text.encode()).hexdigest()[:12] + ".npz"


def load_time_norm_table(lam=1.0, period=1.0, K=8, build=True):
    """Return a table from the cache, the shipped data, or a fresh build.

    The cache directory is taken from ``OSEEN_TP_CACHE``; freshly built
    tables are written there when it is set.
    """
    name = _table_key(lam, period, K)
    candidates = []
    cache = os.environ.get(CACHE_ENV)
    if cache:
        candidates.append(Path(cache) / name)
    candidates.append(DATA_DIR / name)
    for path in candidates:
        if path.exists():
            return TimeNormTable.from_npz(path)
    if not build:
        raise FileNotFoundError(f"no cached time-norm table {name}")
    table = build_time_norm_table(lam, period, K)
    if cache:
        Path(cache).mkdir(parents=True, exist_ok=True)
        table.to_npz(Path(cache) / name)
    return table

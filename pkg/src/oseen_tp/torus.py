"""Time-periodic fields on a uniform torus-times-box grid.

Time samples are ``t_n = n T / n_time`` and space samples are
``x_j = -L + j h`` with ``h = 2 L / n_space``.  The time axis carries the
normalized measure ``(1/T) int_0^T dt``, so the mean over one period is the
``k = 0`` Fourier coefficient.

Spectral coefficients approximate the continuous transform

    F(k, xi) = (1/T) int_0^T int f(t, x) exp(-i (w_k t + xi . x)) dx dt,

with ``w_k = 2 pi k / T`` and ``xi`` on the dual lattice ``pi m / L``.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from ._validation import check_int, check_positive
from .exceptions import ShapeError

TPF_MAGIC = "tpf"
TPF_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[0, T) x [-L, L)^3``."""

    period: float = 2 * np.pi
    n_time: int = 32
    n_space: int = 64
    box_half_length: float = 40.0

    def __post_init__(self):
        check_positive(self.period, "period")
        check_positive(self.box_half_length, "box_half_length")
        check_int(self.n_time, "n_time")
        check_int(self.n_space, "n_space", minimum=2)

    @property
    def h(self):
        return 2.0 * self.box_half_length / self.n_space

    @property
    def times(self):
        return np.arange(self.n_time) * self.period / self.n_time

    @property
    def x(self):
        return -self.box_half_length + self.h * np.arange(self.n_space)

    @property
    def mode_numbers(self):
        """Integer time-mode numbers in FFT order."""
        return np.fft.fftfreq(self.n_time, d=1.0 / self.n_time).astype(int)

    @property
    def omegas(self):
        return 2.0 * np.pi * self.mode_numbers / self.period

    @property
    def xi(self):
        """1D angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_space, d=self.h)

    @property
    def dxi(self):
        return np.pi / self.box_half_length

    def wavevectors(self, sparse=True):
        xi = self.xi
        return np.meshgrid(xi, xi, xi, indexing="ij", sparse=sparse)

    def mesh(self, sparse=False):
        x = self.x
        return np.meshgrid(x, x, x, indexing="ij", sparse=sparse)

    def points(self):
        """Spatial grid points, shape ``(n, n, n, 3)``."""
        return np.stack(self.mesh(), axis=-1)

    def origin_index(self):
        return self.n_space // 2

    @property
    def shape(self):
        n = self.n_space
        return (self.n_time, n, n, n)

    def sign_lattice(self):
        """``(-1)^(m1 + m2 + m3)``: phase from the box offset ``x_0 = -L``."""
        m = np.fft.fftfreq(self.n_space, d=1.0 / self.n_space).astype(int)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        return s[:, None, None] * s[None, :, None] * s[None, None, :]

    def to_dict(self):
        return {
            "period": self.period,
            "n_time": self.n_time,
            "n_space": self.n_space,
            "box_half_length": self.box_half_length,
        }

    def with_time(self, n_time):
        return replace(self, n_time=n_time)


@dataclass(frozen=True, eq=False)
class TorusField:
    """Real samples on a :class:`Grid`, shape ``(n_time, n, n, n, d)``."""

    grid: Grid
    values: np.ndarray
    divergence_free: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 4:
            v = v[..., None]
        if v.shape[:4] != self.grid.shape:
            raise ShapeError(f"values of shape {v.shape} do not match grid {self.grid.shape}")
        if np.iscomplexobj(v):
            raise ShapeError("TorusField holds real samples; use SpectralField for coefficients")
        v = np.ascontiguousarray(v, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_components(self):
        return self.values.shape[-1]

    def __add__(self, other):
        return TorusField(self.grid, self.values + _vals(other), self.divergence_free)

    def __sub__(self, other):
        return TorusField(self.grid, self.values - _vals(other), self.divergence_free)

    def __mul__(self, scalar):
        return TorusField(self.grid, self.values * float(scalar), self.divergence_free)

    __rmul__ = __mul__

    def l2_norm(self):
        """Grid L2 norm with the normalized time measure."""
        h3 = self.grid.h**3
        return float(np.sqrt(np.sum(self.values**2) * h3 / self.grid.n_time))

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def time_slice(self, n):
        return self.values[n]


def _vals(other):
    return other.values if isinstance(other, TorusField) else other


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex coefficients ``F[k, m1, m2, m3, d]`` in FFT index order."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim == 4:
            c = c[..., None]
        if c.shape[:4] != self.grid.shape:
            raise ShapeError(f"coefficients of shape {c.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c.astype(complex, copy=False))

    @property
    def mode_numbers(self):
        return self.grid.mode_numbers

    def mode(self, k):
        """Coefficient slice for time mode ``k`` (negative ``k`` allowed)."""
        idx = k % self.grid.n_time
        return self.coeffs[idx]

    def l2_norm(self):
        dxi = self.grid.dxi / (2.0 * np.pi)
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * dxi**3))


def to_modes(f, workers=None):
    """Time-space Fourier coefficients of ``f``."""
    if not isinstance(f, TorusField):
        raise ShapeError("to_modes expects a TorusField")
    g = f.grid
    c = sfft.fftn(f.values, axes=(0, 1, 2, 3), workers=workers)
    c *= (g.h**3 / g.n_time) * g.sign_lattice()[None, ..., None]
    return SpectralField(g, c)


def from_modes(F, workers=None, real=True):
    if not isinstance(F, SpectralField):
        raise ShapeError("from_modes expects a SpectralField")
    g = F.grid
    c = F.coeffs * g.sign_lattice()[None, ..., None]
    v = sfft.ifftn(c, axes=(0, 1, 2, 3), workers=workers) * (g.n_time / g.h**3)
    if real:
        return TorusField(g, v.real)
    return v


def project_steady(f):
    """Time average over one period, replicated along the time axis."""
    mean = f.values.mean(axis=0, keepdims=True)
    return TorusField(f.grid, np.broadcast_to(mean, f.values.shape), f.divergence_free)


def project_periodic(f):
    """Purely periodic part ``f - project_steady(f)``."""
    mean = f.values.mean(axis=0, keepdims=True)
    return TorusField(f.grid, f.values - mean, f.divergence_free)


def spectral_divergence(f, workers=None):
    """Max modulus of the spectral divergence of a 3-component field."""
    if f.n_components != 3:
        raise ShapeError("divergence needs a 3-component field")
    g = f.grid
    c = sfft.fftn(f.values, axes=(1, 2, 3), workers=workers)
    K = g.wavevectors()
    div = sum(1j * K[j][None] * c[..., j] for j in range(3))
    return float(np.max(np.abs(sfft.ifftn(div, axes=(1, 2, 3), workers=workers))))


def time_interpolate(values, grid, t):
    """Trigonometric interpolation in time of samples ``values[n, ...]``."""
    c = np.fft.fft(values, axis=0) / grid.n_time
    phase = np.exp(1j * np.outer(np.atleast_1d(t), grid.omegas))
    out = np.tensordot(phase, c, axes=(1, 0)).real
    return out if np.ndim(t) else out[0]


# ---------------------------------------------------------------------------
# .tpf binary format: one JSON header line, then little-endian float64 data.


def write_tpf(path, field_, meta=None):
    header = {
        "format": TPF_MAGIC,
        "version": TPF_VERSION,
        "grid": field_.grid.to_dict(),
        "components": field_.n_components,
        "shape": list(field_.values.shape),
        "dtype": "float64",
        "endianness": "little",
        "order": "C",
        "divergence_free": bool(field_.divergence_free),
        "meta": meta if meta is not None else dict(field_.meta),
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n"
    data = np.ascontiguousarray(field_.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(line.encode("utf-8"))
        fh.write(data.tobytes(order="C"))


def read_tpf(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        header = json.loads(line.decode("utf-8"))
        if header.get("format") != TPF_MAGIC:
            raise ShapeError(f"{path} is not a .tpf file")
        if header.get("endianness") != "little" or header.get("dtype") != "float64":
            raise ShapeError("only little-endian float64 .tpf payloads are supported")
        shape = tuple(header["shape"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ShapeError(f"payload has {data.size} values, header promises shape {shape}")
    grid = Grid(**header["grid"])
    return TorusField(
        grid,
        data.reshape(shape).astype(float),
        bool(header.get("divergence_free", False)),
        header.get("meta", {}),
    )

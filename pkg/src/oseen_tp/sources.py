"""Compactly supported, time-periodic forcing data.

A :class:`CompactSource` is ``f(t, x) = a(t) phi(|x - c| / R0) d`` with the
smooth bump ``phi(r) = exp(1 - 1 / (1 - r^2))`` on ``r < 1`` (``phi(0) = 1``),
a trigonometric time profile ``a(t) = sum_k c_k exp(i w_k t)`` and a fixed
direction ``d``.  Arbitrary evaluators can be wrapped with
:meth:`CompactSource.from_function`; they lose the closed-form Fourier data.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._validation import check_points, check_positive
from .exceptions import InvalidParameterError, ShapeError
from .torus import Grid, TorusField

TIME_PROFILES = {
    "constant": {0: 1.0},
    "one_plus_cos": {0: 1.0, 1: 0.5, -1: 0.5},
    "cos": {1: 0.5, -1: 0.5},
    "sin": {1: -0.5j, -1: 0.5j},
}

_N_RADIAL = 200
_N_TIME = 64


def bump(r):
    """``exp(1 - 1/(1 - r^2))`` for ``|r| < 1``, exactly zero otherwise."""
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) < 1.0
    rr = np.where(inside, r, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        val = np.exp(1.0 - 1.0 / (1.0 - rr * rr))
    return np.where(inside, val, 0.0)


def _radial_rule(n=_N_RADIAL):
    t, w = leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def bump_moment(n=_N_RADIAL):
    """``int_0^1 phi(r) r^2 dr``."""
    s, w = _radial_rule(n)
    return float(np.sum(w * bump(s) * s**2))


def bump_transform(rho, radius=1.0, n=_N_RADIAL):
    """``int phi(|x| / R) exp(-i xi.x) dx`` at ``|xi| = rho`` (real, radial)."""
    rho = np.asarray(rho, dtype=float)
    s, w = _radial_rule(n)
    arg = np.multiply.outer(rho * radius, s)
    kern = np.sinc(arg / np.pi)
    return 4.0 * np.pi * radius**3 * np.tensordot(kern, w * bump(s) * s**2, axes=(-1, 0))


def _normalize_profile(profile):
    if isinstance(profile, str):
        if profile not in TIME_PROFILES:
            raise InvalidParameterError(
                f"unknown time profile {profile!r}; choose from {sorted(TIME_PROFILES)}"
            )
        profile = TIME_PROFILES[profile]
    coeffs = {int(k): complex(c) for k, c in dict(profile).items()}
    for k, c in coeffs.items():
        if abs(coeffs.get(-k, 0.0) - np.conj(c)) > 1e-14 * max(1.0, abs(c)):
            raise InvalidParameterError("time profile must be real: c_{-k} = conj(c_k)")
    return coeffs


@dataclass(frozen=True, eq=False)
class CompactSource:
    """Vector forcing supported in the ball ``|x - center| <= support_radius``."""

    support_radius: float = 1.0
    amplitude: float = 1.0
    direction: tuple = (0.0, 1.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)
    time_profile: dict = field(default_factory=lambda: dict(TIME_PROFILES["constant"]))
    period: float = 2 * np.pi
    smoothness: str = "C-infinity"
    evaluator: object = None

    def __post_init__(self):
        check_positive(self.support_radius, "support_radius")
        check_positive(self.period, "period")
        d = np.asarray(self.direction, dtype=float)
        c = np.asarray(self.center, dtype=float)
        if d.shape != (3,) or c.shape != (3,):
            raise ShapeError("direction and center must be 3-vectors")
        object.__setattr__(self, "direction", tuple(d))
        object.__setattr__(self, "center", tuple(c))
        object.__setattr__(self, "time_profile", _normalize_profile(self.time_profile))

    @classmethod
    def from_function(cls, evaluator, support_radius, period=2 * np.pi, smoothness="unknown"):
        """Wrap ``evaluator(t, x) -> (..., 3)``; values outside the ball are zeroed."""
        return cls(support_radius, 1.0, period=period, smoothness=smoothness, evaluator=evaluator)

    @property
    def is_parametric(self):
        return self.evaluator is None

    @property
    def axisymmetric(self):
        """True when the support is centred on the ``e_1`` axis."""
        return self.is_parametric and self.center[1] == 0.0 and self.center[2] == 0.0

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        w = 2.0 * np.pi / self.period
        out = np.zeros(t.shape, dtype=complex)
        for k, c in self.time_profile.items():
            out = out + c * np.exp(1j * k * w * t)
        return out.real

    def spatial(self, x):
        """Scalar spatial factor ``phi(|x - c| / R0)``."""
        x = check_points(x)
        r = np.linalg.norm(x - np.asarray(self.center), axis=-1) / self.support_radius
        return bump(r)

    def __call__(self, t, x):
        x = check_points(x)
        t = np.asarray(t, dtype=float)
        if self.evaluator is not None:
            vals = np.asarray(self.evaluator(t, x), dtype=float)
            r = np.linalg.norm(x - np.asarray(self.center), axis=-1)
            return np.where((r <= self.support_radius)[..., None], vals, 0.0)
        scal = self.amplitude * self.profile(t) * self.spatial(x)
        return scal[..., None] * np.asarray(self.direction)

    def mode_numbers(self):
        """Time modes carried by the source (all of ``-_N_TIME/2..`` when sampled)."""
        if self.is_parametric:
            return sorted(k for k, c in self.time_profile.items() if c != 0)
        return list(np.fft.fftfreq(_N_TIME, d=1.0 / _N_TIME).astype(int))

    def mode_density(self, k, x):
        """Spatial density of the ``k``-th time coefficient, ``(..., 3)`` complex."""
        x = check_points(x)
        if self.is_parametric:
            c = self.time_profile.get(int(k), 0.0)
            return (self.amplitude * c * self.spatial(x))[..., None] * np.asarray(self.direction)
        t = np.arange(_N_TIME) * self.period / _N_TIME
        samples = np.stack([self(tn, x) for tn in t])
        coeffs = np.fft.fft(samples, axis=0) / _N_TIME
        return coeffs[int(k) % _N_TIME]

    def time_mean_density(self, x):
        return self.mode_density(0, x).real

    def shifted(self, tau):
        """The source ``f(t - tau, x)``."""
        w = 2.0 * np.pi / self.period
        if self.is_parametric:
            prof = {k: c * np.exp(-1j * k * w * tau) for k, c in self.time_profile.items()}
            return replace(self, time_profile=prof)
        ev = self.evaluator
        return replace(self, evaluator=lambda t, x: ev(np.asarray(t) - tau, x))

    def __add__(self, other):
        return SourceCombination([(1.0, self)]) + other

    def __mul__(self, alpha):
        return SourceCombination([(float(alpha), self)])

    __rmul__ = __mul__

    def mass(self):
        """``int phi(|x - c| / R0) dx``."""
        return 4.0 * np.pi * self.support_radius**3 * bump_moment()

    def mode_integral(self, k):
        """Spatial integral of the ``k``-th time coefficient, a 3-vector."""
        if not self.is_parametric:
            raise InvalidParameterError("mode integrals need a parametric source")
        c = self.time_profile.get(int(k), 0.0)
        return self.amplitude * c * self.mass() * np.asarray(self.direction)

    def mode_transform(self, k, xi):
        """Continuous Fourier transform of the ``k``-th time coefficient.

        ``xi`` has shape ``(..., 3)``; returns ``(..., 3)`` complex.
        """
        if not self.is_parametric:
            raise InvalidParameterError("Fourier data needs a parametric source")
        xi = np.asarray(xi, dtype=float)
        c = self.time_profile.get(int(k), 0.0)
        rho = np.linalg.norm(xi, axis=-1)
        phase = np.exp(-1j * xi @ np.asarray(self.center))
        scal = self.amplitude * c * bump_transform(rho, self.support_radius) * phase
        return scal[..., None] * np.asarray(self.direction)

    def sample(self, grid: Grid):
        """Grid samples as a :class:`TorusField`."""
        if abs(grid.period - self.period) > 1e-12 * self.period:
            raise InvalidParameterError(
                f"source period {self.period} differs from grid period {grid.period}"
            )
        pts = grid.points()
        if self.evaluator is None:
            sp = self.amplitude * self.spatial(pts)
            a = self.profile(grid.times)
            vals = a[:, None, None, None, None] * sp[None, ..., None] * np.asarray(self.direction)
        else:
            vals = np.stack([self(t, pts) for t in grid.times])
        return TorusField(grid, vals, meta={"source": self.describe()})

    def describe(self):
        if not self.is_parametric:
            return {"kind": "function", "support_radius": self.support_radius}
        return {
            "kind": "bump",
            "support_radius": self.support_radius,
            "amplitude": self.amplitude,
            "direction": list(self.direction),
            "center": list(self.center),
            "time_profile": {str(k): [c.real, c.imag] for k, c in sorted(self.time_profile.items())},
            "period": self.period,
        }


@dataclass(frozen=True, eq=False)
class SourceCombination:
    """Finite linear combination ``sum a_i f_i`` of compact sources."""

    terms: list

    def __post_init__(self):
        terms = [(float(a), f) for a, f in self.terms]
        periods = {f.period for _, f in terms}
        if len(periods) > 1:
            raise InvalidParameterError("combined sources must share the period")
        object.__setattr__(self, "terms", terms)

    @property
    def period(self):
        return self.terms[0][1].period

    @property
    def support_radius(self):
        return max(np.linalg.norm(f.center) + f.support_radius for _, f in self.terms)

    @property
    def center(self):
        return (0.0, 0.0, 0.0)

    @property
    def is_parametric(self):
        return all(f.is_parametric for _, f in self.terms)

    @property
    def axisymmetric(self):
        return all(f.axisymmetric for _, f in self.terms)

    def __add__(self, other):
        if isinstance(other, CompactSource):
            other = SourceCombination([(1.0, other)])
        return SourceCombination(self.terms + other.terms)

    def __mul__(self, alpha):
        return SourceCombination([(alpha * a, f) for a, f in self.terms])

    __rmul__ = __mul__

    def __call__(self, t, x):
        return sum(a * f(t, x) for a, f in self.terms)

    def mode_numbers(self):
        return sorted({k for _, f in self.terms for k in f.mode_numbers()})

    def mode_density(self, k, x):
        return sum(a * f.mode_density(k, x) for a, f in self.terms)

    def time_mean_density(self, x):
        return self.mode_density(0, x).real

    def mode_integral(self, k):
        return sum(a * f.mode_integral(k) for a, f in self.terms)

    def mode_transform(self, k, xi):
        return sum(a * f.mode_transform(k, xi) for a, f in self.terms)

    def shifted(self, tau):
        return SourceCombination([(a, f.shifted(tau)) for a, f in self.terms])

    def sample(self, grid):
        vals = sum(a * f.sample(grid).values for a, f in self.terms)
        return TorusField(grid, vals)

    def parts(self):
        """``(coefficient, source)`` pairs."""
        return list(self.terms)

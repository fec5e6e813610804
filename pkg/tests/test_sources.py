import numpy as np
import pytest
from scipy import integrate

from oseen_tp.exceptions import InvalidParameterError
from oseen_tp.sources import CompactSource, bump, bump_moment, bump_transform
from oseen_tp.torus import Grid

# int_0^1 exp(1 - 1/(1 - r^2)) r^2 dr, mpmath at 30 digits
BUMP_MOMENT = 0.0954136992943015776604806337256


def test_bump_support_and_value():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0 and bump(1.5) == 0.0
    assert bump(0.999) < 1e-200


def test_bump_moment_reference():
    assert bump_moment() == pytest.approx(BUMP_MOMENT, rel=1e-13)


def test_bump_transform_against_quadrature():
    for rho, R in ((0.0, 1.0), (0.7, 2.0), (3.0, 1.5)):
        ref, _ = integrate.quad(
            lambda r: 4 * np.pi * r * r * bump(r / R) * (np.sinc(rho * r / np.pi)), 0, R, epsabs=0, epsrel=1e-12, limit=200
        )
        assert bump_transform(rho, R) == pytest.approx(ref, rel=1e-10)


def test_source_modes_and_mass():
    src = CompactSource(2.0, 0.5, (1.0, 0.0, 0.0), time_profile="one_plus_cos", period=1.0)
    assert src.mode_numbers() == [-1, 0, 1]
    assert src.mass() == pytest.approx(4 * np.pi * 8 * BUMP_MOMENT, rel=1e-12)
    assert np.allclose(src.mode_integral(1), [0.25 * src.mass(), 0, 0])
    x = np.array([[0.3, 0.1, 0.2]])
    vals = np.stack([src(t, x) for t in np.linspace(0, 1, 16, endpoint=False)])
    assert np.allclose(vals.mean(axis=0), src.time_mean_density(x))


def test_sample_and_period_mismatch():
    src = CompactSource(2.0, 1.0, period=1.0)
    g = Grid(period=1.0, n_time=4, n_space=16, box_half_length=4.0)
    f = src.sample(g)
    assert f.values.shape == g.shape + (3,)
    mass = f.values[0, ..., 1].sum() * g.h**3
    assert mass == pytest.approx(src.mass(), rel=1e-2)
    with pytest.raises(InvalidParameterError):
        src.sample(Grid(period=2.0, n_time=4, n_space=16, box_half_length=4.0))


def test_shift_and_combination():
    src = CompactSource(1.0, 1.0, time_profile="cos", period=2.0)
    x = np.array([0.1, 0.0, 0.0])
    assert np.allclose(src.shifted(0.5)(0.7, x), src(0.2, x))
    combo = 2.0 * src + src
    assert np.allclose(combo(0.3, x), 3 * src(0.3, x))

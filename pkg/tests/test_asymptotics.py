import numpy as np
import pytest
from sklearn.base import clone

from oseen_tp.asymptotics import (
    DecayRateEstimator,
    FarField,
    fit_decay,
    grid_radii,
    leading_coefficient,
    remainder_steady,
    report_csv,
    time_l2,
)
from oseen_tp.convolve import convolve_gamma0
from oseen_tp.exceptions import DomainError, InvalidParameterError, RankError
from oseen_tp.geometry import wake
from oseen_tp.sources import CompactSource
from oseen_tp.steady import gamma0

# int_0^1 exp(1 - 1/(1 - r^2)) r^2 dr, 30 digits (mpmath)
BUMP_MOMENT = 0.0954136992943015776604806337256


def _ray(direction, radii):
    d = np.asarray(direction, float)
    return np.outer(radii, d / np.linalg.norm(d))


def test_leading_coefficient_of_bump():
    src = CompactSource(2.0, 0.3, (0, 1, 0), center=(1.0, 0, 0), time_profile="one_plus_cos", period=2.0)
    lead = leading_coefficient(src)
    mass = 0.3 * 4 * np.pi * 2.0**3 * BUMP_MOMENT
    assert np.allclose(lead.steady_coefficient, [0, mass, 0], rtol=1e-8, atol=1e-14)
    assert list(lead.modes) == [1]
    assert np.allclose(lead.mode_coefficients[0], [0, mass / 2, 0], rtol=1e-8, atol=1e-14)
    # int P'f(t) dy = mass cos(w t)
    t = np.array([0.0, 0.5, 1.0])
    assert np.allclose(lead.periodic_coefficient(t)[:, 1], mass * np.cos(np.pi * t), rtol=1e-8, atol=1e-14)


def test_time_l2_is_parseval():
    modes = np.array([[1.0 + 1j, 0, 0], [0, 2.0, 0]])
    t = np.linspace(0, 1, 64, endpoint=False)
    w = np.exp(2j * np.pi * np.outer(t, [1, 2]))
    sig = 2 * np.einsum("tk,kj->tj", w, modes).real
    assert time_l2(modes) == pytest.approx(np.sqrt(np.mean(np.sum(sig**2, -1))), rel=1e-12)


def test_fit_exact_power():
    r = np.geomspace(5, 500, 9)
    fit = fit_decay((_ray((0, 1, 0), r), 3 * r**-2.0))
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    assert fit.residual < 1e-12 and not fit.log_factor


def test_fit_power_with_log():
    r = np.geomspace(10, 1000, 12)
    fit = fit_decay((_ray((0, 0, 1), r), r**-1.5 * np.log(r)), "power_with_log")
    assert fit.exponent == pytest.approx(-1.5, abs=1e-10)
    assert fit.log_power == pytest.approx(1.0, abs=1e-9)
    auto = fit_decay((_ray((0, 0, 1), r), r**-1.5 * np.log(r)), "auto")
    assert auto.model == "power_with_log"
    plain = fit_decay((_ray((0, 0, 1), r), r**-2.5), "auto")
    assert plain.model == "pure_power"


def test_fit_wake_product():
    r = np.geomspace(5, 500, 10)
    pts = _ray((-1, 1, 0), r) + np.array([0.0, 0.0, 0.0])
    pts[:, 2] = np.linspace(0, 3, r.size)  # break collinearity of log r and log(1 + s)
    mags = 1.0 / (np.linalg.norm(pts, axis=-1) * (1 + wake(pts, 1.0)))
    fit = fit_decay((pts, mags), "wake_product")
    assert fit.exponent == pytest.approx(-1.0, abs=1e-8)
    assert fit.wake_exponent == pytest.approx(-1.0, abs=1e-8)


def test_fit_errors():
    r = np.geomspace(5, 500, 9)
    pts = _ray((0, 1, 0), r)
    with pytest.raises(DomainError):
        fit_decay((pts[:3], r[:3] ** -1.0))
    with pytest.raises(DomainError):
        fit_decay((_ray((0, 1, 0), np.linspace(10, 50, 8)), np.ones(8)))
    with pytest.raises(DomainError):
        fit_decay((pts, -(r**-1.0)))
    with pytest.raises(InvalidParameterError):
        fit_decay((pts, r**-1.0), "cubic")
    # s vanishes on the wake axis, leaving an empty wake column
    wake_pts = _ray((-1, 0, 0), np.geomspace(10, 1000, 8))
    with pytest.raises(RankError):
        fit_decay((wake_pts, np.linalg.norm(wake_pts, axis=-1) ** -2.0), "wake_product")


def test_decay_estimator():
    r = np.geomspace(4, 400, 10)
    X = _ray((1, 1, 1), r)
    y = 0.7 * r**-3.0
    est = DecayRateEstimator().fit(X, y)
    assert est.exponent_ == pytest.approx(-3.0, abs=1e-10)
    assert np.allclose(est.predict(X[:2]), y[:2], rtol=1e-10)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert not hasattr(c, "fit_")
    assert est.set_params(model="pure_power").model == "pure_power"


def test_linear_far_field_is_data_convolution():
    src = CompactSource(1.0, 1.0, (1, 0, 0), center=(0.0, 0.3, 0.0), period=1.0)
    far = FarField(None, src, 1.0, nonlinear=False)
    x = np.array([-9.0, 3.0, 0.0])
    ref = convolve_gamma0(src, x, 1.0, tol=1e-6, max_order=30).values
    assert np.allclose(far.steady(x), ref, rtol=1e-6)
    assert np.allclose(far.steady_leading(x), gamma0(x, 1.0) @ far.leading.steady_coefficient)
    rem = far.steady_remainder(x)
    assert np.allclose(rem, ref - far.steady_leading(x), rtol=1e-3, atol=1e-6 * np.abs(ref).max())
    assert far.magnitude("w", x) == 0.0
    with pytest.raises(InvalidParameterError):
        far.magnitude("pressure", x)


def test_remainder_domain():
    src = CompactSource(3.0, 1.0, period=1.0)
    R0 = remainder_steady(lambda x: gamma0(x, 1.0) @ leading_coefficient(src).steady_coefficient, src, 1.0)
    assert np.allclose(R0(np.array([0.0, 10.0, 0.0])), 0.0, atol=1e-15)
    with pytest.raises(DomainError):
        R0(np.array([0.0, 5.0, 0.0]))


def test_report_csv_and_grid_radii():
    rows = [{"ray": "wake", "quantity": "v", "exponent": -1.0000004, "log_flag": False, "residual": 1e-3, "n_samples": 7}]
    assert report_csv(rows) == "ray,quantity,exponent,log_flag,residual,n_samples\nwake,v,-1,0,0.001,7\n"
    r = grid_radii(0.625, 5.0, 50.0, 7)
    assert np.allclose(r / 0.625, np.round(r / 0.625))
    assert r[0] == 5.0 and r[-1] == 50.0 and np.all(np.diff(r) > 0)

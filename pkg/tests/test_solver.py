import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oseen_tp.acceptance import manufactured_problem
from oseen_tp.exceptions import DivergenceError, DomainError, InvalidParameterError, SingularityError
from oseen_tp.solver import (
    PicardOptions,
    SolveConfig,
    SpectralOps,
    contraction_factor,
    divergence_free_trials,
    free_space_linear,
    grid_symbol_scan,
    linear_residual,
    picard_solve,
    solve_linear,
    symbol_zero_scan,
    weak_residual,
)
from oseen_tp.sources import CompactSource
from oseen_tp.steady import gamma0
from oseen_tp.torus import Grid, TorusField, project_periodic, project_steady


@pytest.fixture
def grid():
    return Grid(period=1.0, n_time=8, n_space=32, box_half_length=20.0)


def test_manufactured_solution(grid):
    u, f = manufactured_problem(grid, 1.0, sigma=3.0)
    b = solve_linear(f, SolveConfig(1.0, 1.0, grid))
    assert np.sqrt(np.sum((b.u.values - u.values) ** 2) / np.sum(u.values**2)) < 1e-6
    assert b.divergence() < 1e-12
    assert linear_residual(b, f, 1.0) < 1e-10
    assert np.abs(b.p.values).max() < 1e-6 * np.abs(u.values).max()


def test_zero_forcing_gives_zero(grid):
    f = TorusField(grid, np.zeros(grid.shape + (3,)))
    b = picard_solve(f, SolveConfig(1.0, 1.0, grid))
    assert np.all(b.u.values == 0)
    assert b.meta["converged"]


def test_time_constant_forcing_gives_steady_solution(grid):
    src = CompactSource(3.0, 1.0, (0, 1, 0), period=1.0)
    b = solve_linear(src.sample(grid), SolveConfig(1.0, 1.0, grid))
    assert np.max(np.abs(b.w.values)) < 1e-14 * np.max(np.abs(b.v.values))


def test_steady_periodic_split_of_the_solver(grid):
    src = CompactSource(3.0, 1.0, (1, 0, 0), time_profile="one_plus_cos", period=1.0)
    f = src.sample(grid)
    cfg = SolveConfig(1.0, 1.0, grid)
    whole = solve_linear(f, cfg).u.values
    parts = solve_linear(project_steady(f), cfg).u.values + solve_linear(project_periodic(f), cfg).u.values
    assert np.allclose(whole, parts, atol=1e-14 * np.abs(whole).max())
    assert np.allclose(project_steady(solve_linear(f, cfg).u).values, solve_linear(project_steady(f), cfg).u.values, atol=1e-16)


def test_mean_mode_policy(grid):
    src = CompactSource(3.0, 1.0, (0, 1, 0), period=1.0)
    b = solve_linear(src.sample(grid), SolveConfig(1.0, 1.0, grid))
    mean = src.sample(grid).values[0, ..., 1].mean()
    assert b.meta["mean_removed"][1] == pytest.approx(mean, rel=1e-12)
    with pytest.raises(SingularityError):
        solve_linear(src.sample(grid), SolveConfig(1.0, 1.0, grid, mean_policy="reject"))
    with pytest.raises(InvalidParameterError):
        SolveConfig(1.0, 1.0, grid, mean_policy="ignore")


def test_config_validation(grid):
    with pytest.raises(InvalidParameterError):
        SolveConfig(0.0, 1.0, grid)
    with pytest.raises(InvalidParameterError):
        SolveConfig(1.0, 2.0, grid)
    with pytest.raises(InvalidParameterError):
        PicardOptions(damping=1.5)


def test_weak_residual_detects_perturbation(grid):
    u, f = manufactured_problem(grid, 1.0, sigma=3.0)
    trials = divergence_free_trials(grid, 3, seed=4, width=4.0, spread=6.0)
    good = np.abs(weak_residual(u, f, trials, 1.0, nonlinear=False))
    noise = np.random.default_rng(0).normal(size=u.values.shape) * 1e-6 * u.max_abs()
    bad = np.abs(weak_residual(u + noise, f, trials, 1.0, nonlinear=False))
    assert good.max() < 1e-10
    assert bad.max() > 100 * good.max()


def test_weak_residual_requires_divergence_free_trials(grid):
    u, f = manufactured_problem(grid, 1.0)
    phi = TorusField(grid, np.broadcast_to(grid.points()[None] * np.exp(-np.sum(grid.points() ** 2, -1))[None, ..., None], grid.shape + (3,)))
    with pytest.raises(DomainError):
        weak_residual(u, f, [phi], 1.0)


def test_trials_are_divergence_free_and_seeded(grid):
    a = divergence_free_trials(grid, 2, seed=7)
    b = divergence_free_trials(grid, 2, seed=7)
    assert np.array_equal(a[1].values, b[1].values)
    ops = SpectralOps(grid)
    for phi in a:
        div = np.einsum("...mm->...", ops.gradient(phi.values[0]))
        assert np.max(np.abs(div)) < 1e-12 * phi.max_abs()


def test_picard_small_data(grid):
    src = CompactSource(4.0, 1e-2, (0, 1, 0), time_profile="one_plus_cos", period=1.0)
    b = picard_solve(src, SolveConfig(1.0, 1.0, grid))
    assert b.meta["converged"]
    assert contraction_factor(b) < 0.1
    assert b.meta["fixed_point_residual"] < 10 * b.meta["tol"]
    trials = divergence_free_trials(grid, 3, seed=1, spread=6.0)
    assert np.max(np.abs(weak_residual(b.u, src.sample(grid), trials, 1.0))) < 1e-10
    # the nonlinear correction is second order in the data
    lin = solve_linear(src.sample(grid), SolveConfig(1.0, 1.0, grid)).u
    corr = (b.u - lin).max_abs() / lin.max_abs()
    assert 1e-5 < corr < 1e-1


def test_picard_large_data_diverges():
    g = Grid(period=1.0, n_time=4, n_space=16, box_half_length=8.0)
    src = CompactSource(3.0, 1e3, (1, 0, 0), time_profile="one_plus_cos", period=1.0)
    with pytest.raises(DivergenceError):
        picard_solve(src, SolveConfig(1.0, 1.0, g, PicardOptions(max_iter=40)))


def test_symbol_scan_examples():
    scan = symbol_zero_scan(1.0, 2 * np.pi, [-1, 0, 1], np.array([-1.0, 0.0, 1.0]))
    assert scan.zeros == [(0, 0.0, 0.0, 0.0)]
    assert scan.passed
    # |xi|^2 + i(k - xi_1) at k=1, xi=(1,0,0) is 1, at k=0, xi=(0,0,1) is 1
    assert scan.minimum == pytest.approx(1.0)
    g = Grid(period=1.0, n_time=8, n_space=16, box_half_length=8.0)
    s = grid_symbol_scan(g, -2.0)
    assert s.passed and s.minimum > 0 and s.n_points == 8 * 16**3


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), st.floats(0.1, 10), st.integers(-4, 4))
def test_symbol_vanishes_only_at_origin(lam, period, k):
    xi = np.linspace(-2, 2, 9)
    scan = symbol_zero_scan(lam, period, [k], xi)
    assert all(z[0] == 0 and z[1:] == (0.0, 0.0, 0.0) for z in scan.zeros)


def test_free_space_linear_matches_direct_sum():
    g = Grid(period=1.0, n_time=1, n_space=16, box_half_length=10.0)
    src = CompactSource(2.5, 1.0, (0, 1, 0), period=1.0)
    f = src.sample(g)
    u = free_space_linear(f, 1.0, chunk=1000).values[0]
    pts = g.points().reshape(-1, 3)
    fy = f.values[0].reshape(-1, 3)
    m = np.abs(fy).max(-1) > 0
    for i in [(8, 12, 8), (4, 8, 8), (12, 8, 8)]:
        d = g.points()[i] - pts[m]
        ok = np.linalg.norm(d, axis=-1) > 0
        ref = g.h**3 * np.einsum("njl,nl->j", gamma0(d[ok], 1.0), fy[m][ok])
        assert np.allclose(u[i], ref, rtol=1e-12, atol=1e-15)


def test_free_space_linear_needs_table_for_periodic_data(grid):
    src = CompactSource(3.0, 1.0, (0, 1, 0), time_profile="cos", period=1.0)
    with pytest.raises(InvalidParameterError):
        free_space_linear(src.sample(grid), 1.0)

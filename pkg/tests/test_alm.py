"""ALM driver: inner solves, multiplier updates, the outer loop and its
trace invariants."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from socalm import (AlmConfig, AlmStatus, ConeRegion, Exact, FixedSequence,
                    InnerConfig, InnerFailure, Proportional, builtin,
                    generate_planted, inner_solve, solve, update_multiplier)
from socalm.cone import project_q
from socalm.lagrangian import aug_lagrangian, residual


def perturbed_start(p, scale, seed):
    rng = np.random.default_rng(seed)
    step = rng.standard_normal(p.n + p.m + 1)
    step *= scale / np.linalg.norm(step)
    sol = p.known_solution
    return sol.x + step[:p.n], sol.lam + step[p.n:]


def test_inner_solve_zero_iterations_at_stationary_point():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    sol = p.known_solution
    x, grad_norm, iters = inner_solve(p, sol.lam, 5.0, sol.x, 1e-10)
    assert iters == 0
    assert grad_norm <= 1e-10
    assert_allclose(x, sol.x)


def test_inner_solve_projection_subproblem():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    x, grad_norm, _ = inner_solve(p, np.zeros(3), 10.0, np.zeros(3), 1e-8)
    assert grad_norm <= 1e-8
    ev = aug_lagrangian(p, x, np.zeros(3), 10.0)
    assert np.linalg.norm(ev.grad_x) <= 1e-8


def test_inner_solve_quadratic_interior_single_newton_step():
    p = generate_planted(3, 2, ConeRegion.INTERIOR_Q, seed=1)
    rng = np.random.default_rng(0)
    start = p.known_solution.x + 0.05 * rng.standard_normal(3)
    x, grad_norm, iters = inner_solve(p, np.zeros(3), 1.0, start, 1e-8)
    assert iters == 1
    assert grad_norm <= 1e-12


def test_inner_solve_failure_budget():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    with pytest.raises(InnerFailure):
        inner_solve(p, np.zeros(3), 10.0, np.zeros(3), 1e-8, InnerConfig(max_inner=0))


def test_inner_solve_rejects_bad_arguments():
    p = builtin("interior_trivial")
    with pytest.raises(ValueError):
        inner_solve(p, np.zeros(2), -1.0, np.zeros(2), 1e-8)
    with pytest.raises(ValueError):
        inner_solve(p, np.zeros(2), 1.0, np.zeros(2), -1e-8)


def test_update_multiplier_examples():
    # scaled interior value with zero multiplier projects to zero
    assert_allclose(update_multiplier([10.0, 1.0, 0.0], np.zeros(3), 5.0), np.zeros(3))
    # fixed point at an exact KKT pair
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    sol = p.known_solution
    for rho in (0.5, 1.0, 10.0):
        out = update_multiplier(p.phi_value(sol.x), sol.lam, rho)
        assert np.linalg.norm(out - sol.lam) <= 1e-12
    # worked projection example
    assert_allclose(update_multiplier([0.0, 2.0, 0.0], np.zeros(3), 1.0), [-1.0, 1.0, 0.0])


def test_config_validation():
    with pytest.raises(ValueError):
        AlmConfig(rho0=0.5, rho_bar=1.0)
    with pytest.raises(ValueError):
        AlmConfig(rho_growth=0.5)
    with pytest.raises(ValueError):
        AlmConfig(outer_tol=0.0)
    with pytest.raises(ValueError):
        Proportional(1.5)
    with pytest.raises(ValueError):
        FixedSequence(())


def test_solve_starting_at_solution_stops_immediately():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=2)
    sol = p.known_solution
    point, trace = solve(p, sol.x, sol.lam, AlmConfig(outer_tol=1e-10))
    assert trace.status is AlmStatus.CONVERGED
    assert len(trace) == 1
    assert trace.sigmas[0] <= 1e-10
    assert_allclose(point.x, sol.x)


def test_solve_projection_documented_run():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    cfg = AlmConfig(rho0=10.0, eps_rule=Proportional(0.1), outer_tol=1e-9, max_outer=40)
    point, trace = solve(p, np.array([0.1, 0.9, 0.05]), np.array([-0.9, 1.1, 0.0]), cfg)
    assert trace.status is AlmStatus.CONVERGED
    assert len(trace) - 1 <= 30
    assert np.linalg.norm(point.x - [1.0, 1.0, 0.0]) <= 1e-7
    assert np.linalg.norm(point.lam - [-1.0, 1.0, 0.0]) <= 1e-7
    # regression: first converged run took 9 outer iterations
    assert len(trace) - 1 == 9


def test_solve_planted_boundary_problem():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=1)
    x0, lam0 = perturbed_start(p, 1e-2, seed=42)
    cfg = AlmConfig(rho0=100.0, rho_bar=100.0, rho_growth=1.0, rho_max=100.0,
                    eps_rule=Proportional(0.1), outer_tol=1e-9, max_outer=60)
    point, trace = solve(p, x0, lam0, cfg)
    sol = p.known_solution
    assert trace.status is AlmStatus.CONVERGED
    err = np.linalg.norm(point.x - sol.x) + np.linalg.norm(point.lam - sol.lam)
    assert err <= 1e-6


def test_trace_invariants():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=1)
    x0, lam0 = perturbed_start(p, 0.5, seed=3)
    cfg = AlmConfig(rho0=10.0, eps_rule=Proportional(0.1), outer_tol=1e-9, max_outer=60)
    _, trace = solve(p, x0, lam0, cfg)
    assert trace.status is AlmStatus.CONVERGED
    # accepted inner solutions meet the requested tolerance
    for k in range(len(trace) - 1):
        assert trace.grad_norms[k] <= max(trace.epss[k], 1e-13)
    # multipliers stay in -Q from the first update on
    for lam in trace.lams[1:]:
        assert np.linalg.norm(project_q(lam)) <= 1e-12
    # sigma entries recompute exactly from the stored iterates
    for k in range(len(trace)):
        assert abs(trace.sigmas[k] - residual(p, trace.xs[k], trace.lams[k])) <= 1e-12
    # residual is nonincreasing after burn-in (soft: at most 2 violations)
    sig = trace.sigmas
    violations = sum(1 for k in range(1, len(sig) - 1) if sig[k + 1] > sig[k])
    assert violations <= 2


def test_kkt_fixed_point_invariant():
    p = generate_planted(4, 2, ConeRegion.ZERO, seed=3)
    sol = p.known_solution
    sigma0 = residual(p, sol.x, sol.lam)
    assert sigma0 <= 1e-12
    # one full ALM step from the solution stays at the solution
    x1, _, _ = inner_solve(p, sol.lam, 10.0, sol.x, 0.0)
    lam1 = update_multiplier(p.phi_value(x1), sol.lam, 10.0)
    assert residual(p, x1, lam1) <= 1e-10


def test_solve_max_iterations():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=4)
    x0, lam0 = perturbed_start(p, 10.0, seed=5)
    cfg = AlmConfig(rho0=1.0, rho_bar=1.0, rho_growth=1.0, rho_max=1.0,
                    eps_rule=Proportional(0.5), outer_tol=1e-14, max_outer=2)
    _, trace = solve(p, x0, lam0, cfg)
    assert trace.status is AlmStatus.MAX_ITERATIONS
    assert len(trace) == 3


def test_solve_inner_failure_partial_trace():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=4)
    x0, lam0 = perturbed_start(p, 1.0, seed=6)
    cfg = AlmConfig(rho0=10.0, inner=InnerConfig(max_inner=0), outer_tol=1e-12)
    _, trace = solve(p, x0, lam0, cfg)
    assert trace.status is AlmStatus.INNER_FAILURE
    assert len(trace) >= 1


def test_exact_rule_reaches_machine_floor():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    cfg = AlmConfig(rho0=10.0, eps_rule=Exact(), outer_tol=1e-9, max_outer=40)
    _, trace = solve(p, np.array([0.1, 0.9, 0.05]), np.array([-0.9, 1.1, 0.0]), cfg)
    assert trace.status is AlmStatus.CONVERGED
    for k in range(len(trace) - 1):
        assert trace.grad_norms[k] <= 1e-13


def test_fixed_sequence_rule():
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    cfg = AlmConfig(rho0=10.0, eps_rule=FixedSequence((1e-4, 1e-6, 1e-8)),
                    outer_tol=1e-9, max_outer=40)
    _, trace = solve(p, np.array([0.1, 0.9, 0.05]), np.array([-0.9, 1.1, 0.0]), cfg)
    assert trace.status is AlmStatus.CONVERGED
    assert trace.epss[0] == 1e-4 and trace.epss[1] == 1e-6
    for k in range(2, len(trace) - 1):
        assert trace.epss[k] == 1e-8


def test_penalty_growth_when_residual_stalls():
    p = generate_planted(3, 2, ConeRegion.BOUNDARY_Q_NONZERO, seed=7)
    x0, lam0 = perturbed_start(p, 5.0, seed=8)
    cfg = AlmConfig(rho0=1.0, rho_bar=1.0, rho_growth=10.0, rho_max=1e6,
                    eps_rule=Proportional(0.1), outer_tol=1e-9, max_outer=60)
    _, trace = solve(p, x0, lam0, cfg)
    assert trace.status is AlmStatus.CONVERGED
    assert max(trace.rhos) <= 1e6
    assert all(trace.rhos[k + 1] >= trace.rhos[k] for k in range(len(trace) - 1))

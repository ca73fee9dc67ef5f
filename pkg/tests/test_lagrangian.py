"""Augmented Lagrangian values, gradients, generalized Hessians and the
KKT residual, checked against finite differences and the fixed-point
characterization of KKT pairs."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from socalm import ConeRegion, builtin, generate_planted
from socalm.cone import project_q
from socalm.lagrangian import aug_hessian, aug_lagrangian, lagrangian_l, residual

from _util import constant_phi_problem, fd_grad, fd_jac


BUILTINS = [
    builtin("example_3_2"),
    builtin("projection", a=(0.0, 2.0, 0.0)),
    builtin("interior_trivial"),
    builtin("scaled_quadratic", seed=0),
]


def test_lagrangian_examples():
    p = builtin("interior_trivial")
    value, grad, hess = lagrangian_l(p, np.zeros(2), np.zeros(2))
    assert value == 0.0
    assert_allclose(grad, np.zeros(2))
    assert_allclose(hess, np.eye(2))

    e32 = builtin("example_3_2")
    sol = e32.known_solution
    _, grad, hess = lagrangian_l(e32, sol.x, sol.lam)
    assert np.linalg.norm(grad) <= 1e-14
    assert_allclose(hess, 2.0 * np.eye(2))

    proj = builtin("projection", a=(0.0, 2.0, 0.0))
    _, grad, _ = lagrangian_l(proj, np.array([1.0, 1.0, 0.0]), np.array([-1.0, 1.0, 0.0]))
    assert np.linalg.norm(grad) <= 1e-14


def test_aug_value_at_kkt_pairs():
    for p in BUILTINS:
        sol = p.known_solution
        f_bar = p.f_value(sol.x)
        for rho in (0.5, 1.0, 10.0):
            ev = aug_lagrangian(p, sol.x, sol.lam, rho)
            assert abs(ev.value - f_bar) <= 1e-10 * max(1.0, abs(f_bar))
            assert np.linalg.norm(ev.grad_x) <= 1e-10
            assert np.linalg.norm(ev.grad_lam) <= 1e-10


def test_aug_value_constant_phi():
    p = constant_phi_problem([0.0, 2.0, 0.0])
    ev = aug_lagrangian(p, np.zeros(2), np.zeros(3), rho=2.0)
    assert abs(ev.value - 2.0) <= 1e-14


def test_aug_value_feasible_zero_multiplier():
    p = builtin("interior_trivial")
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.standard_normal(2)
        ev = aug_lagrangian(p, x, np.zeros(2), rho=3.0)
        assert abs(ev.value - p.f_value(x)) <= 1e-14


def test_aug_grad_lambda_identity():
    p = builtin("scaled_quadratic", seed=4)
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.standard_normal(p.n)
        lam = rng.standard_normal(p.m + 1)
        rho = float(10.0 ** rng.uniform(-1, 1))
        ev = aug_lagrangian(p, x, lam, rho)
        assert np.array_equal(ev.grad_lam, (ev.polar_proj - lam) / rho)


def test_aug_rejects_nonpositive_rho():
    p = builtin("interior_trivial")
    with pytest.raises(ValueError):
        aug_lagrangian(p, np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        aug_hessian(p, np.zeros(2), np.zeros(2), -1.0)


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.name)
def test_aug_gradients_match_finite_differences(p):
    rng = np.random.default_rng(33)
    for _ in range(100):
        x = rng.standard_normal(p.n)
        lam = rng.standard_normal(p.m + 1)
        rho = float(10.0 ** rng.uniform(-0.5, 1.0))
        ev = aug_lagrangian(p, x, lam, rho)
        gx = fd_grad(lambda z: aug_lagrangian(p, z, lam, rho).value, x)
        gl = fd_grad(lambda z: aug_lagrangian(p, x, z, rho).value, lam)
        assert np.linalg.norm(gx - ev.grad_x) <= 1e-6 * max(1.0, np.linalg.norm(ev.grad_x))
        assert np.linalg.norm(gl - ev.grad_lam) <= 1e-6 * max(1.0, np.linalg.norm(ev.grad_lam))


def test_monotone_in_rho():
    rng = np.random.default_rng(8)
    for p in BUILTINS:
        for _ in range(25):
            x = rng.standard_normal(p.n)
            lam = rng.standard_normal(p.m + 1)
            r1 = float(10.0 ** rng.uniform(-1, 1))
            r2 = r1 * (1.0 + abs(rng.standard_normal()))
            v1 = aug_lagrangian(p, x, lam, r1).value
            v2 = aug_lagrangian(p, x, lam, r2).value
            assert v2 >= v1 - 1e-12


def test_concave_in_lambda():
    rng = np.random.default_rng(9)
    for p in BUILTINS:
        for _ in range(25):
            x = rng.standard_normal(p.n)
            lam1 = rng.standard_normal(p.m + 1)
            lam2 = rng.standard_normal(p.m + 1)
            t = rng.random()
            rho = float(10.0 ** rng.uniform(-1, 1))
            mid = aug_lagrangian(p, x, t * lam1 + (1 - t) * lam2, rho).value
            v1 = aug_lagrangian(p, x, lam1, rho).value
            v2 = aug_lagrangian(p, x, lam2, rho).value
            assert mid >= t * v1 + (1 - t) * v2 - 1e-10


def test_fixed_point_characterization_both_directions():
    rhos = (0.5, 1.0, 10.0)
    for seed, region in ((1, ConeRegion.BOUNDARY_Q_NONZERO), (2, ConeRegion.INTERIOR_Q),
                         (3, ConeRegion.ZERO)):
        p = generate_planted(4, 2, region, seed=seed)
        sol = p.known_solution
        # KKT pair => both gradients vanish for every rho
        assert residual(p, sol.x, sol.lam) <= 1e-10
        for rho in rhos:
            ev = aug_lagrangian(p, sol.x, sol.lam, rho)
            assert np.linalg.norm(ev.grad_x) + np.linalg.norm(ev.grad_lam) <= 1e-8
        # definitely-not-KKT points must show up in some gradient
        rng = np.random.default_rng(seed)
        for _ in range(20):
            x = sol.x + rng.standard_normal(p.n) * 0.1
            lam = sol.lam + rng.standard_normal(p.m + 1) * 0.1
            if residual(p, x, lam) <= 1e-6:
                continue
            worst = max(np.linalg.norm(aug_lagrangian(p, x, lam, rho).grad_x)
                        + np.linalg.norm(aug_lagrangian(p, x, lam, rho).grad_lam)
                        for rho in rhos)
            assert worst > 1e-8


def test_residual_examples():
    e32 = builtin("example_3_2")
    sol = e32.known_solution
    assert residual(e32, sol.x, sol.lam) <= 1e-12
    # frozen value computed independently with a brute-force projection
    value = residual(e32, np.array([0.0, 0.1]), np.array([-1.0, 0.8, 0.6]))
    assert abs(value - 0.05673749951495176) <= 1e-10

    # far outside feasibility with lam = 0 the residual is the plain sum
    p = builtin("projection", a=(0.0, 2.0, 0.0))
    x = np.array([-5.0, 3.0, 1.0])
    phi = p.phi_value(x)
    expected = np.linalg.norm(p.f_grad(x)) + np.linalg.norm(phi - project_q(phi))
    assert abs(residual(p, x, np.zeros(3)) - expected) <= 1e-14


def _kink_margin(y):
    rnorm = np.linalg.norm(y[1:])
    return min(abs(rnorm - y[0]), abs(rnorm + y[0]))


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.name)
def test_aug_hessian_matches_fd_jacobian_off_kinks(p):
    rng = np.random.default_rng(44)
    checked = 0
    while checked < 30:
        x = rng.standard_normal(p.n)
        lam = rng.standard_normal(p.m + 1)
        rho = float(10.0 ** rng.uniform(-0.5, 0.5))
        shifted = rho * p.phi_value(x) + lam
        if _kink_margin(shifted) <= 1e-3:
            continue
        H = aug_hessian(p, x, lam, rho)
        Hfd = fd_jac(lambda z: aug_lagrangian(p, z, lam, rho).grad_x, x)
        assert np.abs(H - Hfd).max() <= 1e-5 * max(1.0, np.abs(H).max())
        checked += 1


def test_aug_hessian_documented_cases():
    trivial = builtin("interior_trivial")
    H = aug_hessian(trivial, np.zeros(2), np.zeros(2), 1.0)
    assert_allclose(H, np.eye(2))

    proj = builtin("projection", a=(0.0, 2.0, 0.0))
    x = np.array([1.0, 1.0, 0.0])
    lam = np.array([-1.0, 1.0, 0.0])
    expected = np.eye(3) + 0.5 * np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert_allclose(aug_hessian(proj, x, lam, 1.0), expected, atol=1e-14)

    # At the counterexample's KKT pair the shifted point lands exactly on
    # the polar boundary, so the gradient has a kink there: the returned
    # element is the deterministic outside-limit selection (here 2 I), while
    # central differences would average the two one-sided limits.
    e32 = builtin("example_3_2")
    sol = e32.known_solution
    H = aug_hessian(e32, sol.x, sol.lam, 1.0)
    assert_allclose(H, 2.0 * np.eye(2), atol=1e-12)

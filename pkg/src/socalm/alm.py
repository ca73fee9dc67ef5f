"""Augmented Lagrangian method: inexact inner solves, multiplier updates,
penalty scheduling and a per-iteration trace.

Each outer iteration minimizes the augmented Lagrangian in x down to a
gradient tolerance eps_k (regularized semismooth Newton with Armijo
backtracking), then projects the shifted constraint value onto the polar
cone to update the multiplier.  The penalty never drops below its floor;
it grows only when the KKT residual fails to halve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .cone import project_polar
from .lagrangian import aug_hessian, aug_lagrangian, residual
from .model import KktPoint, SocpProblem


@dataclass(frozen=True)
class Exact:
    """Inner solves down to the machine floor (1e-13) every iteration."""


@dataclass(frozen=True)
class Proportional:
    """eps_k = eta * sigma_k; keeps the tolerance a fixed fraction of the
    residual, which is what the linear-rate analysis consumes."""

    eta: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")


@dataclass(frozen=True)
class FixedSequence:
    """Explicit eps_k values; the last entry repeats when exhausted."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("need at least one tolerance value")


EpsRule = Union[Exact, Proportional, FixedSequence]

GRAD_FLOOR = 1e-13


@dataclass(frozen=True)
class InnerConfig:
    mu0: float = 1e-8          # initial Newton regularization
    armijo: float = 1e-4       # sufficient-decrease constant
    backtrack: float = 0.5     # step shrink factor
    max_inner: int = 200
    max_linesearch: int = 60


@dataclass(frozen=True)
class AlmConfig:
    rho0: float = 10.0
    rho_bar: float = 1.0       # penalty floor
    rho_growth: float = 10.0
    rho_max: float = 1e8
    eps_rule: EpsRule = Proportional(0.1)
    outer_tol: float = 1e-9
    max_outer: int = 100
    inner: InnerConfig = InnerConfig()
    seed: int = 0

    def __post_init__(self):
        if self.rho_bar <= 0 or self.rho0 < self.rho_bar:
            raise ValueError("need rho0 >= rho_bar > 0")
        if self.rho_growth < 1.0:
            raise ValueError("rho_growth must be >= 1")
        if self.rho_max < self.rho0:
            raise ValueError("rho_max must be >= rho0")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")


class AlmStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    INNER_FAILURE = "InnerFailure"


class InnerFailure(RuntimeError):
    """Inner solver exhausted its iteration budget."""

    def __init__(self, message, x, grad_norm, iters):
        super().__init__(message)
        self.x = x
        self.grad_norm = grad_norm
        self.iters = iters


@dataclass
class AlmTrace:
    """Per-iteration history; row k describes the iterate (x_k, lam_k)
    and the controls of the step taken from it (zeros on the last row)."""

    xs: List[np.ndarray] = field(default_factory=list)
    lams: List[np.ndarray] = field(default_factory=list)
    rhos: List[float] = field(default_factory=list)
    epss: List[float] = field(default_factory=list)
    sigmas: List[float] = field(default_factory=list)
    inner_iters: List[int] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    status: Optional[AlmStatus] = None

    def append(self, x, lam, rho, eps, sigma, inner, grad_norm, value):
        self.xs.append(np.array(x, dtype=float))
        self.lams.append(np.array(lam, dtype=float))
        self.rhos.append(float(rho))
        self.epss.append(float(eps))
        self.sigmas.append(float(sigma))
        self.inner_iters.append(int(inner))
        self.grad_norms.append(float(grad_norm))
        self.values.append(float(value))

    def __len__(self):
        return len(self.sigmas)


def _newton_direction(H: np.ndarray, g: np.ndarray, mu0: float) -> np.ndarray:
    """Solve (H + mu I) d = -g, doubling mu from mu0 until the
    factorization is positive definite."""
    n = g.size
    eye = np.eye(n)
    mu = 0.0
    for _ in range(80):
        try:
            factor = cho_factor(H + mu * eye, lower=True)
            return cho_solve(factor, -g)
        except LinAlgError:
            mu = mu0 if mu == 0.0 else 2.0 * mu
    return -g


def inner_solve(p: SocpProblem, lambda_k, rho_k: float, x_start, eps_k: float,
                cfg: InnerConfig = InnerConfig()):
    """Minimize x -> L_rho(x, lambda_k) until its gradient norm is below
    max(eps_k, GRAD_FLOOR).

    Returns (x, grad_norm, iters).  The step is regularized Newton on the
    generalized Hessian with Armijo backtracking on the value; steepest
    descent takes over whenever Newton fails to produce descent.
    """
    if eps_k < 0:
        raise ValueError("eps_k must be nonnegative")
    if rho_k <= 0:
        raise ValueError("rho_k must be positive")
    lam = np.asarray(lambda_k, dtype=float)
    x = np.array(x_start, dtype=float)
    floor = max(eps_k, GRAD_FLOOR)
    ev = aug_lagrangian(p, x, lam, rho_k)
    for it in range(cfg.max_inner + 1):
        grad_norm = float(np.linalg.norm(ev.grad_x))
        if grad_norm <= floor:
            return x, grad_norm, it
        if it == cfg.max_inner:
            raise InnerFailure(
                f"inner solve stalled at ||grad||={grad_norm:.3e} after {it} iterations",
                x, grad_norm, it)
        H = aug_hessian(p, x, lam, rho_k)
        d = _newton_direction(H, ev.grad_x, cfg.mu0)
        # allowance for roundoff in the value: near the minimum the true
        # decrease is below machine noise and a strict Armijo test stalls
        noise = 8.0 * np.finfo(float).eps * max(1.0, abs(ev.value))
        accepted = None
        for direction in (d, -ev.grad_x):
            slope = float(ev.grad_x @ direction)
            if slope >= 0.0:
                continue
            step = 1.0
            for _ in range(cfg.max_linesearch):
                cand = x + step * direction
                cand_ev = aug_lagrangian(p, cand, lam, rho_k)
                if cand_ev.value <= ev.value + cfg.armijo * step * slope + noise:
                    accepted = (cand, cand_ev)
                    break
                step *= cfg.backtrack
            if accepted is not None:
                break
        if accepted is None:
            raise InnerFailure(
                f"line search failed at ||grad||={grad_norm:.3e} (iteration {it})",
                x, grad_norm, it)
        x, ev = accepted
    raise AssertionError("unreachable")


def update_multiplier(phi_x_next, lambda_k, rho_k: float) -> np.ndarray:
    """Multiplier update: project rho_k * Phi(x_next) + lambda_k onto -Q."""
    if rho_k <= 0:
        raise ValueError("rho_k must be positive")
    phi = np.asarray(phi_x_next, dtype=float)
    lam = np.asarray(lambda_k, dtype=float)
    return project_polar(rho_k * phi + lam)


def _eps_for(rule: EpsRule, k: int, sigma: float) -> float:
    if isinstance(rule, Exact):
        return 0.0
    if isinstance(rule, Proportional):
        return rule.eta * sigma
    values = rule.values
    return values[k] if k < len(values) else values[-1]


def solve(p: SocpProblem, x0, lambda0, cfg: AlmConfig = AlmConfig()):
    """Run the ALM from (x0, lambda0); returns (KktPoint, AlmTrace).

    Stops when the KKT residual drops to cfg.outer_tol (Converged), the
    outer budget is exhausted (MaxIterations) or an inner solve fails
    (InnerFailure, with the partial trace).  The penalty is raised by
    rho_growth, capped at rho_max, whenever the residual fails to halve.
    """
    p.check_dims(x0, lambda0)
    x = np.array(x0, dtype=float)
    lam = np.array(lambda0, dtype=float)
    rho = cfg.rho0
    trace = AlmTrace()
    sigma = residual(p, x, lam)
    for k in range(cfg.max_outer + 1):
        value = aug_lagrangian(p, x, lam, rho).value
        if sigma <= cfg.outer_tol:
            trace.append(x, lam, rho, 0.0, sigma, 0, 0.0, value)
            trace.status = AlmStatus.CONVERGED
            break
        if k == cfg.max_outer:
            trace.append(x, lam, rho, 0.0, sigma, 0, 0.0, value)
            trace.status = AlmStatus.MAX_ITERATIONS
            break
        eps_k = _eps_for(cfg.eps_rule, k, sigma)
        try:
            x_next, grad_norm, iters = inner_solve(p, lam, rho, x, eps_k, cfg.inner)
        except InnerFailure as failure:
            trace.append(x, lam, rho, eps_k, sigma, failure.iters, failure.grad_norm, value)
            trace.status = AlmStatus.INNER_FAILURE
            break
        trace.append(x, lam, rho, eps_k, sigma, iters, grad_norm, value)
        lam_next = update_multiplier(p.phi_value(x_next), lam, rho)
        sigma_next = residual(p, x_next, lam_next)
        if sigma_next > 0.5 * sigma:
            rho = min(cfg.rho_max, rho * cfg.rho_growth)
        x, lam, sigma = x_next, lam_next, sigma_next
    return KktPoint(x, lam), trace

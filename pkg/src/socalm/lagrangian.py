"""Lagrangian, augmented Lagrangian and the KKT residual.

The augmented Lagrangian with penalty rho > 0 is

    L_rho(x, lam) = f(x) + (rho/2) dist^2(Phi(x) + lam/rho; Q) - ||lam||^2/(2 rho),

with gradients

    grad_x  = grad f(x) + JPhi(x)' Pi_{-Q}(rho Phi(x) + lam),
    grad_lam = (Pi_{-Q}(rho Phi(x) + lam) - lam) / rho.

Both follow from Pi_{-Q}(rho v) = rho Pi_{-Q}(v); the evaluation caches
Phi(x), JPhi(x) and the shifted point so each oracle runs once per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import jacobian_project_polar, project_polar, project_q
from .model import SocpProblem


@dataclass(frozen=True)
class AugEval:
    """One evaluation of the augmented Lagrangian at (x, lam, rho)."""

    value: float
    grad_x: np.ndarray
    grad_lam: np.ndarray
    shifted: np.ndarray      # rho * Phi(x) + lam
    polar_proj: np.ndarray   # Pi_{-Q}(shifted)


def lagrangian_l(p: SocpProblem, x, lam):
    """Ordinary Lagrangian: value, x-gradient and x-Hessian."""
    p.check_dims(x, lam)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = p.phi_value(x)
    value = p.f_value(x) + float(lam @ phi)
    grad_x = p.f_grad(x) + p.phi_jac(x).T @ lam
    hess_xx = p.f_hess(x) + p.phi_hess_contract(x, lam)
    return value, grad_x, 0.5 * (hess_xx + hess_xx.T)


def aug_lagrangian(p: SocpProblem, x, lam, rho: float) -> AugEval:
    """Evaluate the augmented Lagrangian and its first derivatives."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    p.check_dims(x, lam)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = p.phi_value(x)
    jac = p.phi_jac(x)
    shifted = rho * phi + lam
    polar = project_polar(shifted)
    # (rho/2) dist^2(Phi + lam/rho; Q) = ||polar||^2 / (2 rho)
    value = p.f_value(x) + (polar @ polar - lam @ lam) / (2.0 * rho)
    grad_x = p.f_grad(x) + jac.T @ polar
    grad_lam = (polar - lam) / rho
    return AugEval(value=float(value), grad_x=grad_x, grad_lam=grad_lam,
                   shifted=shifted, polar_proj=polar)


def aug_hessian(p: SocpProblem, x, lam, rho: float) -> np.ndarray:
    """Generalized Hessian of x -> L_rho(x, lam).

    H = Hess_xx L(x, mu) + rho * JPhi(x)' V JPhi(x) with mu the polar
    projection of the shifted point and V a generalized Jacobian of
    Pi_{-Q} there.  This is the exact Hessian whenever the shifted point
    avoids the cone boundaries; on a kink the cone module's deterministic
    selection is inherited.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    p.check_dims(x, lam)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = p.phi_value(x)
    jac = p.phi_jac(x)
    shifted = rho * phi + lam
    mu = project_polar(shifted)
    V = jacobian_project_polar(shifted)
    H = p.f_hess(x) + p.phi_hess_contract(x, mu) + rho * (jac.T @ V @ jac)
    return 0.5 * (H + H.T)


def residual(p: SocpProblem, x, lam) -> float:
    """KKT residual ||grad_x L(x, lam)|| + ||Phi(x) - Pi_Q(Phi(x) + lam)||."""
    p.check_dims(x, lam)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = p.phi_value(x)
    grad_l = p.f_grad(x) + p.phi_jac(x).T @ lam
    return float(np.linalg.norm(grad_l) + np.linalg.norm(phi - project_q(phi + lam)))

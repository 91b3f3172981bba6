"""Discrete second-order phase-transition energies and their exact gradients.

The central functional is

    F[u] = int ( W(u)/eps - k eps (u')^2 + eps^3 (u'')^2 ) dx,

together with its k = 0 specialization, the first-order (gradient-penalty)
energy int (W(u)/eps + eps (u')^2) dx, and the unscaled form
int (W(u) - k (u')^2 + (u'')^2) dx obtained by the change of variable
x -> x / eps.  Energies and gradients share one discretization (stencils
plus trapezoid weights), so each gradient is the exact derivative of the
computed discrete energy, not a discretized Euler-Lagrange operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field_core import (
    BoundarySpec,
    Field,
    Grid,
    first_derivative_operator,
    fixed_value_mask,
    quadrature_weights,
    second_derivative_operator,
)
from .potential import Potential, eval_dw, eval_w

__all__ = [
    "EnergyParams",
    "EnergyBreakdown",
    "DiscreteEnergy",
    "second_order_objective",
    "modica_mortola_objective",
    "unscaled_objective",
    "energy_second_order",
    "energy_e0",
    "energy_modica_mortola",
    "energy_unscaled",
    "energy_gradient",
    "stima_gap",
]

# typical curvature of W at the wells (W'' = 2 for the standard quartic);
# only used to scale preconditioner diagonals
_WELL_CURVATURE = 2.0


@dataclass(frozen=True)
class EnergyParams:
    """Singular-perturbation scale eps > 0, gradient coefficient k, and W."""

    epsilon: float
    k: float
    potential: Potential

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Signed decomposition: total = potential - k * gradient + curvature.

    The three stored terms are the unsigned quantities int W(u)/eps,
    eps int (u')^2 and eps^3 int (u'')^2 (all nonnegative).
    """

    potential_term: float
    gradient_term: float
    curvature_term: float
    total: float

    def to_json_dict(self) -> dict:
        return {
            "potential": self.potential_term,
            "gradient": self.gradient_term,
            "curvature": self.curvature_term,
            "total": self.total,
        }


def _raw_integrals(u: Field, pot: Potential, bc: BoundarySpec):
    """Trapezoid values of (int W(u), int (u')^2, int (u'')^2)."""
    w = quadrature_weights(u.grid)
    d1, c1 = first_derivative_operator(u.grid, bc)
    d2, c2 = second_derivative_operator(u.grid, bc)
    up = d1 @ u.values + c1
    upp = d2 @ u.values + c2
    iw = float(w @ np.asarray(eval_w(pot, u.values)))
    ig = float(w @ up**2)
    ic = float(w @ upp**2)
    return iw, ig, ic


def energy_second_order(u: Field, p: EnergyParams, bc: BoundarySpec) -> EnergyBreakdown:
    """Full second-order energy with its signed term decomposition."""
    iw, ig, ic = _raw_integrals(u, p.potential, bc)
    pot = iw / p.epsilon
    grad = p.epsilon * ig
    curv = p.epsilon**3 * ic
    return EnergyBreakdown(pot, grad, curv, pot - p.k * grad + curv)


def energy_e0(
    u: Field, epsilon: float, pot: Potential, bc: BoundarySpec
) -> EnergyBreakdown:
    """The k = 0 energy int (W(u)/eps + eps^3 (u'')^2)."""
    return energy_second_order(u, EnergyParams(epsilon, 0.0, pot), bc)


def energy_modica_mortola(
    u: Field, epsilon: float, pot: Potential, bc: BoundarySpec
) -> float:
    """First-order energy int (W(u)/eps + eps (u')^2)."""
    iw, ig, _ = _raw_integrals(u, pot, bc)
    return iw / epsilon + epsilon * ig


def energy_unscaled(u: Field, k: float, pot: Potential, bc: BoundarySpec) -> float:
    """Blown-up energy int (W(u) - k (u')^2 + (u'')^2), no eps factors."""
    iw, ig, ic = _raw_integrals(u, pot, bc)
    return iw - k * ig + ic


def energy_gradient(u: Field, p: EnergyParams, bc: BoundarySpec) -> Field:
    """Exact gradient of the discrete total; bc-constrained nodes get 0."""
    obj = second_order_objective(u.grid, p, bc)
    _, g = obj(u.values)
    g[fixed_value_mask(u.grid, bc)] = 0.0
    return Field(u.grid, g)


def stima_gap(
    u: Field,
    p: EnergyParams,
    k0_est: float,
    delta: float,
    bc: BoundarySpec | None = None,
) -> float:
    """Slack of the lower bound (1 - k/k0 - delta) E[u] <= F[u].

    Nonnegative return certifies the instance; k0_est is supplied by the
    caller (the interpolation constant has no closed form).
    """
    if not k0_est > 0:
        raise ValueError("k0_est must be positive")
    bc = bc if bc is not None else BoundarySpec.free()
    iw, ig, ic = _raw_integrals(u, p.potential, bc)
    e0 = iw / p.epsilon + p.epsilon**3 * ic
    f = e0 - p.k * p.epsilon * ig
    return f - (1.0 - p.k / k0_est - delta) * e0


class DiscreteEnergy:
    """Weighted discrete energy  alpha int W(u) + beta int (u')^2 + gamma int (u'')^2.

    Calling the object with a value array returns (energy, gradient); the
    gradient is the exact adjoint of the assembled stencils.  A symmetric
    positive-definite approximation of the stiff quadratic part is exposed
    through :meth:`preconditioner` for quasi-Newton initial scaling.
    """

    def __init__(
        self,
        grid: Grid,
        potential: Potential,
        alpha: float,
        beta: float,
        gamma: float,
        bc: BoundarySpec,
    ):
        self.grid = grid
        self.potential = potential
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.bc = bc
        self.w = quadrature_weights(grid)
        self.d1, self.c1 = first_derivative_operator(grid, bc)
        self.d2, self.c2 = second_derivative_operator(grid, bc)
        self._d1t = self.d1.T.tocsr()
        self._d2t = self.d2.T.tocsr()

    def __call__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        up = self.d1 @ v + self.c1
        upp = self.d2 @ v + self.c2
        wv = self.w
        energy = (
            self.alpha * float(wv @ np.asarray(eval_w(self.potential, v)))
            + self.beta * float(wv @ up**2)
            + self.gamma * float(wv @ upp**2)
        )
        grad = self.alpha * wv * np.asarray(eval_dw(self.potential, v))
        if self.beta != 0.0:
            grad = grad + 2.0 * self.beta * (self._d1t @ (wv * up))
        if self.gamma != 0.0:
            grad = grad + 2.0 * self.gamma * (self._d2t @ (wv * upp))
        return energy, grad

    def preconditioner(self, free: np.ndarray):
        """LU solve of the SPD part restricted to the free nodes.

        Keeps the positive quadratic contributions plus a well-curvature
        diagonal; the indefinite -k (u')^2 part is dropped so the metric
        stays positive definite.
        """
        wdiag = sp.diags(self.w)
        m = (_WELL_CURVATURE * max(self.alpha, 0.0)) * wdiag
        if self.gamma > 0.0:
            m = m + (2.0 * self.gamma) * (self.d2.T @ wdiag @ self.d2)
        if self.beta > 0.0:
            m = m + (2.0 * self.beta) * (self.d1.T @ wdiag @ self.d1)
        sub = m.tocsr()[free][:, free].tocsc()
        if sub.shape[0] == 0:
            return None
        lu = spla.splu(sub)
        return lambda r: lu.solve(r)


def second_order_objective(
    grid: Grid, p: EnergyParams, bc: BoundarySpec
) -> DiscreteEnergy:
    return DiscreteEnergy(
        grid, p.potential, 1.0 / p.epsilon, -p.k * p.epsilon, p.epsilon**3, bc
    )


def modica_mortola_objective(
    grid: Grid, epsilon: float, pot: Potential, bc: BoundarySpec
) -> DiscreteEnergy:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return DiscreteEnergy(grid, pot, 1.0 / epsilon, epsilon, 0.0, bc)


def unscaled_objective(
    grid: Grid, k: float, pot: Potential, bc: BoundarySpec
) -> DiscreteEnergy:
    return DiscreteEnergy(grid, pot, 1.0, -k, 1.0, bc)

"""Limited-memory quasi-Newton minimization over free nodal values.

The solver is a two-loop L-BFGS with backtracking Armijo line search.
Objectives may expose an SPD approximation of their stiff quadratic part
(see ``DiscreteEnergy.preconditioner``) which is used as the initial
inverse-Hessian metric; this keeps iteration counts low despite the
h^-4 conditioning of the curvature term.  Nodes pinned by the boundary
conditions (or by explicit interior pins) are never moved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field_core import BoundarySpec, Field, fixed_value_mask, random_smooth_field

__all__ = [
    "SolveOptions",
    "SolveReport",
    "LineSearchError",
    "minimize_energy",
    "gradient_fd_check",
]

_ARMIJO_C1 = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 50


class LineSearchError(RuntimeError):
    """Raised internally when no acceptable step exists along a direction."""


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 1000
    gradient_tolerance: float = 1e-8
    memory: int = 10
    multistart_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")


@dataclass
class SolveReport:
    minimizer: Field
    energy: float
    iterations: int
    final_gradient_norm: float
    converged: bool
    restarts_used: int
    message: str = ""
    trace: tuple[float, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "energy": self.energy,
            "iterations": self.iterations,
            "final_gradient_norm": self.final_gradient_norm,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "message": self.message,
        }


def _relative_gradient_norm(g: np.ndarray, f: float) -> float:
    return float(np.linalg.norm(g) / (1.0 + abs(f)))


def _lbfgs(fun, x0, opts: SolveOptions, h0_solve=None, project=None):
    """Minimize fun (value, grad on reduced vectors) from x0.

    Returns (x_best, f_best, iterations, final_rel_gnorm, converged,
    message, trace).  Accepted iterates have monotonically nonincreasing
    energies by the Armijo contract.
    """
    x = x0.copy()
    if project is not None:
        x = project(x)
    f, g = fun(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the initial point")
    trace = [f]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    gamma = 1.0
    message = ""
    converged = False
    it = 0
    gnorm = _relative_gradient_norm(g, f)

    while it < opts.max_iterations:
        if gnorm <= opts.gradient_tolerance:
            converged = True
            break
        it += 1

        d = _two_loop(g, s_hist, y_hist, rho_hist, gamma, h0_solve)
        gd = float(g @ d)
        if not np.isfinite(gd) or gd >= 0.0:
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            d = _two_loop(g, s_hist, y_hist, rho_hist, gamma, h0_solve)
            gd = float(g @ d)
            if gd >= 0.0:  # preconditioner is SPD, so this is roundoff only
                d, gd = -g, -float(g @ g)
        if not s_hist and h0_solve is None:
            # first raw steepest-descent step: keep it O(1) in x
            scale = 1.0 / max(1.0, float(np.linalg.norm(d)))
            d, gd = d * scale, gd * scale

        try:
            x_new, f_new, g_new = _armijo(fun, x, f, g, d, gd, project)
        except LineSearchError:
            if s_hist:
                s_hist.clear(), y_hist.clear(), rho_hist.clear()
                continue
            message = (
                f"line search stalled (relative gradient norm {gnorm:.3e})"
            )
            break

        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s), y_hist.append(y), rho_hist.append(1.0 / sy)
            if len(s_hist) > opts.memory:
                s_hist.pop(0), y_hist.pop(0), rho_hist.pop(0)
            gamma = sy / float(y @ y)
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        gnorm = _relative_gradient_norm(g, f)
    else:
        message = "iteration limit reached"

    return x, f, it, gnorm, converged, message, trace


def _two_loop(g, s_hist, y_hist, rho_hist, gamma, h0_solve):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if h0_solve is not None:
        # rescale the metric so the newest secant pair fits it
        if s_hist:
            y = y_hist[-1]
            yhy = float(y @ h0_solve(y))
            scale = (1.0 / rho_hist[-1]) / yhy if yhy > 0 else 1.0
        else:
            scale = 1.0
        z = scale * h0_solve(q)
    else:
        z = gamma * q
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(y @ z)
        z += (a - b) * s
    return -z


def _armijo(fun, x, f, g, d, gd, project):
    # strict decrease required: once energy differences fall below float
    # resolution the search fails and the caller reports the stall
    t = 1.0
    for _ in range(_MAX_BACKTRACKS):
        x_new = x + t * d
        if project is not None:
            x_new = project(x_new)
            decrease = _ARMIJO_C1 * float(g @ (x_new - x))
        else:
            decrease = _ARMIJO_C1 * t * gd
        f_new, g_new = fun(x_new)
        if np.isfinite(f_new) and f_new <= f + decrease and f_new < f:
            return x_new, f_new, g_new
        t *= _BACKTRACK
    raise LineSearchError


def minimize_energy(
    initial: Field,
    objective,
    bc: BoundarySpec,
    opts: SolveOptions,
    pinned: dict[int, float] | None = None,
    project=None,
) -> SolveReport:
    """Minimize a discrete energy over the free nodal values.

    ``objective`` maps a full value array to (energy, gradient) and may
    expose ``preconditioner(free_mask)``.  Boundary-fixed nodes (and any
    ``pinned`` interior nodes) keep their initial values bit-exactly.
    With ``multistart_count > 1`` the solve restarts from seeded smooth
    perturbations of the initial field and the lowest energy wins.
    ``project``, when given, is applied to candidate iterates (after
    re-imposing the pinned values) before the sufficient-decrease test.
    """
    grid = initial.grid
    fixed = fixed_value_mask(grid, bc)
    x_full = initial.values.copy()
    if bc.left.fixes_value and x_full[0] != bc.left.value:
        raise ValueError("initial field violates the left boundary value")
    if bc.right.fixes_value and x_full[-1] != bc.right.value:
        raise ValueError("initial field violates the right boundary value")
    for idx, val in (pinned or {}).items():
        if x_full[idx] != val:
            raise ValueError(f"initial field violates pinned node {idx}")
        fixed[idx] = True
    free = ~fixed

    def fun(x_free):
        x_full[free] = x_free
        f, grad = objective(x_full)
        return f, grad[free]

    if project is not None:
        full_project = project

        def reduced_project(x_free):
            x_full[free] = x_free
            return full_project(x_full)[free]

    else:
        reduced_project = None

    h0_solve = None
    if hasattr(objective, "preconditioner"):
        h0_solve = objective.preconditioner(free)

    rng = np.random.default_rng(opts.seed)
    best = None
    restarts = 0
    x0_free = initial.values[free].copy()
    for start in range(max(1, opts.multistart_count)):
        if start == 0:
            x_start = x0_free
        else:
            restarts += 1
            wiggle = random_smooth_field(
                grid, rng, amplitude=0.25 * (1.0 + float(np.ptp(initial.values)))
            )
            x_start = x0_free + wiggle.values[free]
        result = _lbfgs(fun, x_start, opts, h0_solve, reduced_project)
        if best is None or result[1] < best[1]:
            best = result

    x_best, f_best, it, gnorm, converged, message, trace = best
    x_full[free] = x_best
    x_full[fixed] = initial.values[fixed]
    return SolveReport(
        minimizer=Field(grid, x_full),
        energy=f_best,
        iterations=it,
        final_gradient_norm=gnorm,
        converged=converged,
        restarts_used=restarts,
        message=message,
        trace=tuple(trace),
    )


def gradient_fd_check(
    objective, u: Field, step: float, bc: BoundarySpec | None = None
) -> float:
    """Max error of the supplied gradient against central finite differences.

    The error is measured relative to the largest finite-difference
    component over the free nodes (all nodes when bc is None).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    free = (
        np.ones(u.grid.n, dtype=bool)
        if bc is None
        else ~fixed_value_mask(u.grid, bc)
    )
    _, grad = objective(u.values)
    fd = np.zeros_like(grad)
    vals = u.values.copy()
    for i in np.flatnonzero(free):
        keep = vals[i]
        vals[i] = keep + step
        f_plus, _ = objective(vals)
        vals[i] = keep - step
        f_minus, _ = objective(vals)
        vals[i] = keep
        fd[i] = (f_plus - f_minus) / (2.0 * step)
    denom = max(float(np.max(np.abs(fd[free]))), 1e-30)
    return float(np.max(np.abs(grad[free] - fd[free])) / denom)

"""Uniform-grid fields with finite-difference derivatives and trapezoid quadrature.

Fields are nodal samples of W^{2,2} functions on a uniform grid.  All
derivative stencils are second order: central differences in the interior,
one-sided three/four-point formulas at free ends, and ghost-node reflection
where an endpoint slope is prescribed.  Quadrature is the composite
trapezoidal rule, matching the stencil order, so that discrete energies and
their gradients can be kept exactly consistent.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid",
    "Field",
    "EndCondition",
    "BoundarySpec",
    "make_grid",
    "sample_function",
    "random_smooth_field",
    "random_neumann_field",
    "derivative1",
    "derivative2",
    "integrate",
    "distance_l1",
    "first_derivative_operator",
    "second_derivative_operator",
    "quadrature_weights",
    "fixed_value_mask",
    "field_to_json",
    "field_from_json",
    "field_to_csv",
    "field_from_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [a, b] with n nodes, spacing h = (b - a) / (n - 1)."""

    a: float
    b: float
    n: int

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)


def make_grid(a: float, b: float, n: int) -> Grid:
    """Build a uniform grid; requires a < b and n >= 3 (stencil width)."""
    if not (a < b):
        raise ValueError(f"grid endpoints must satisfy a < b, got a={a}, b={b}")
    if n < 3:
        raise ValueError(f"grid needs at least 3 nodes, got n={n}")
    return Grid(float(a), float(b), int(n))


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a function on a uniform grid (immutable)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {vals.shape} does not match grid with n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must all be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)


# -- boundary conditions ----------------------------------------------------

_END_KINDS = ("free", "value", "clamped", "slope")


@dataclass(frozen=True)
class EndCondition:
    """Condition at one endpoint.

    kind:
      * ``free``    -- nothing prescribed, one-sided stencils;
      * ``value``   -- nodal value pinned, one-sided stencils;
      * ``clamped`` -- value and slope both pinned (ghost-node stencils);
      * ``slope``   -- slope pinned, value free (ghost-node stencils).
    """

    kind: str
    value: float | None = None
    slope: float | None = None

    def __post_init__(self):
        if self.kind not in _END_KINDS:
            raise ValueError(f"unknown end condition {self.kind!r}")
        if self.kind in ("value", "clamped") and self.value is None:
            raise ValueError(f"end condition {self.kind!r} needs a value")
        if self.kind in ("clamped", "slope"):
            if self.slope is None or not np.isfinite(self.slope):
                raise ValueError(f"end condition {self.kind!r} needs a finite slope")

    @property
    def fixes_value(self) -> bool:
        return self.kind in ("value", "clamped")

    @property
    def fixes_slope(self) -> bool:
        return self.kind in ("clamped", "slope")

    @staticmethod
    def free() -> "EndCondition":
        return EndCondition("free")

    @staticmethod
    def of_value(v: float) -> "EndCondition":
        return EndCondition("value", value=float(v))

    @staticmethod
    def clamped(v: float, slope: float) -> "EndCondition":
        return EndCondition("clamped", value=float(v), slope=float(slope))

    @staticmethod
    def of_slope(slope: float) -> "EndCondition":
        return EndCondition("slope", slope=float(slope))


@dataclass(frozen=True)
class BoundarySpec:
    left: EndCondition
    right: EndCondition

    @staticmethod
    def free() -> "BoundarySpec":
        return BoundarySpec(EndCondition.free(), EndCondition.free())

    @staticmethod
    def dirichlet(left_value: float, right_value: float) -> "BoundarySpec":
        return BoundarySpec(
            EndCondition.of_value(left_value), EndCondition.of_value(right_value)
        )

    @staticmethod
    def clamped(
        left_value: float, left_slope: float, right_value: float, right_slope: float
    ) -> "BoundarySpec":
        return BoundarySpec(
            EndCondition.clamped(left_value, left_slope),
            EndCondition.clamped(right_value, right_slope),
        )


def fixed_value_mask(grid: Grid, bc: BoundarySpec) -> np.ndarray:
    """Boolean mask of nodes whose values the boundary conditions pin."""
    mask = np.zeros(grid.n, dtype=bool)
    mask[0] = bc.left.fixes_value
    mask[-1] = bc.right.fixes_value
    return mask


# -- stencil operators ------------------------------------------------------
#
# Derivatives are realized as sparse matrices plus constant offsets,
# u' = D1 @ u + c1,  u'' = D2 @ u + c2,
# so energies built on them have exact adjoint gradients (D^T actions).


@lru_cache(maxsize=128)
def _operators(grid: Grid, bc: BoundarySpec):
    n, h = grid.n, grid.h
    d1 = sp.lil_matrix((n, n))
    d2 = sp.lil_matrix((n, n))
    c1 = np.zeros(n)
    c2 = np.zeros(n)

    idx = np.arange(1, n - 1)
    d1[idx, idx - 1] = -0.5 / h
    d1[idx, idx + 1] = 0.5 / h
    d2[idx, idx - 1] = 1.0 / h**2
    d2[idx, idx] = -2.0 / h**2
    d2[idx, idx + 1] = 1.0 / h**2

    def one_sided_first(row: int, sign: int):
        # second-order: (-3 u0 + 4 u1 - u2) / (2h), mirrored on the right
        j = row
        d1[j, j] = -1.5 * sign / h
        d1[j, j + sign] = 2.0 * sign / h
        d1[j, j + 2 * sign] = -0.5 * sign / h

    def one_sided_second(row: int, sign: int):
        j = row
        if n >= 4:
            # second-order: (2 u0 - 5 u1 + 4 u2 - u3) / h^2
            d2[j, j] = 2.0 / h**2
            d2[j, j + sign] = -5.0 / h**2
            d2[j, j + 2 * sign] = 4.0 / h**2
            d2[j, j + 3 * sign] = -1.0 / h**2
        else:
            # n == 3: the unique interpolating parabola
            d2[j, 0] = 1.0 / h**2
            d2[j, 1] = -2.0 / h**2
            d2[j, 2] = 1.0 / h**2

    for row, sign, end in ((0, 1, bc.left), (n - 1, -1, bc.right)):
        if end.fixes_slope:
            # prescribed slope s: u' = s exactly; ghost node by reflection,
            # u'' = 2 (u_inner - u_end -+ h s) / h^2
            c1[row] = end.slope
            d2[row, row] = -2.0 / h**2
            d2[row, row + sign] = 2.0 / h**2
            c2[row] = -sign * 2.0 * end.slope / h
        else:
            one_sided_first(row, sign)
            one_sided_second(row, sign)

    return d1.tocsr(), c1, d2.tocsr(), c2


def first_derivative_operator(grid: Grid, bc: BoundarySpec):
    """Sparse matrix D1 and offset c1 with u' = D1 @ u + c1."""
    d1, c1, _, _ = _operators(grid, bc)
    return d1, c1


def second_derivative_operator(grid: Grid, bc: BoundarySpec):
    """Sparse matrix D2 and offset c2 with u'' = D2 @ u + c2."""
    _, _, d2, c2 = _operators(grid, bc)
    return d2, c2


@lru_cache(maxsize=128)
def quadrature_weights(grid: Grid) -> np.ndarray:
    """Composite trapezoidal weights for the grid."""
    w = np.full(grid.n, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    w.setflags(write=False)
    return w


# -- operations -------------------------------------------------------------


def sample_function(grid: Grid, f: Callable[[float], float]) -> Field:
    """Sample f at the grid nodes; rejects non-finite samples."""
    vals = np.asarray(f(grid.nodes()), dtype=float)
    if vals.shape != (grid.n,):  # fall back for scalar-only callables
        vals = np.array([f(x) for x in grid.nodes()], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function produced non-finite values")
    return Field(grid, vals)


def derivative1(u: Field, bc: BoundarySpec) -> Field:
    d1, c1 = first_derivative_operator(u.grid, bc)
    return Field(u.grid, d1 @ u.values + c1)


def derivative2(u: Field, bc: BoundarySpec) -> Field:
    d2, c2 = second_derivative_operator(u.grid, bc)
    return Field(u.grid, d2 @ u.values + c2)


def integrate(v: Field) -> float:
    return float(quadrature_weights(v.grid) @ v.values)


def distance_l1(u: Field, v: Field) -> float:
    """Trapezoid integral of |u - v|; the fields must share a grid."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    return float(quadrature_weights(u.grid) @ np.abs(u.values - v.values))


# -- random smooth fields ---------------------------------------------------


def random_smooth_field(
    grid: Grid,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    modes: int = 4,
    offset_scale: float = 1.0,
) -> Field:
    """Random low-frequency trigonometric field (affine part plus modes).

    Mode amplitudes decay like 1/m^2 so derivatives stay O(amplitude); used
    by the randomized inequality suites and as optimizer seed material.
    """
    xi = (grid.nodes() - grid.a) / grid.length
    vals = rng.uniform(-offset_scale, offset_scale) + amplitude * rng.uniform(
        -1.0, 1.0
    ) * (xi - 0.5)
    for m in range(1, modes + 1):
        am, bm = rng.normal(scale=amplitude / m**2, size=2)
        vals = vals + am * np.cos(m * np.pi * xi) + bm * np.sin(m * np.pi * xi)
    return Field(grid, vals)


def random_neumann_field(
    grid: Grid,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    modes: int = 4,
    offset_scale: float = 1.0,
) -> Field:
    """Random cosine-series field; the analytic slope vanishes at both ends."""
    xi = (grid.nodes() - grid.a) / grid.length
    vals = np.full(grid.n, rng.uniform(-offset_scale, offset_scale))
    for m in range(1, modes + 1):
        am = rng.normal(scale=amplitude / m**2)
        vals = vals + am * np.cos(m * np.pi * xi)
    return Field(grid, vals)


# -- serialization ----------------------------------------------------------


def field_to_json(u: Field) -> str:
    """Checkpoint record {a, b, n, values}; floats round-trip bit-exactly."""
    return json.dumps(
        {"a": u.grid.a, "b": u.grid.b, "n": u.grid.n, "values": u.values.tolist()}
    )


def field_from_json(text: str) -> Field:
    rec = json.loads(text)
    grid = make_grid(rec["a"], rec["b"], rec["n"])
    return Field(grid, np.asarray(rec["values"], dtype=float))


def field_to_csv(u: Field) -> str:
    """Two-column CSV (x, u) for plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "u"])
    for x, val in zip(u.grid.nodes(), u.values):
        writer.writerow([repr(float(x)), repr(float(val))])
    return buf.getvalue()


def field_from_csv(text: str) -> Field:
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    x, vals = data[:, 0], data[:, 1]
    grid = make_grid(x[0], x[-1], len(x))
    if not np.allclose(x, grid.nodes(), rtol=0, atol=1e-9 * max(1.0, abs(x[-1]))):
        raise ValueError("CSV nodes are not a uniform grid")
    return Field(grid, vals)

"""Double-well potentials with wells of level zero at -1 and +1.

Provides the standard quartic well (s^2 - 1)^2 / 4, two counterexample
potentials that each break exactly one part of the quadratic-growth
hypothesis (bounded tail at infinity, quartic flatness at the wells), and
piecewise-polynomial custom potentials.  Wells are hard-coded at +-1;
rescaling a problem with wells elsewhere is the caller's responsibility.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Potential",
    "GrowthCheck",
    "standard_quartic",
    "bounded_tail",
    "flat_wells",
    "piecewise_potential",
    "make_counterexample_potential",
    "potential_by_name",
    "eval_w",
    "eval_dw",
    "verify_growth",
]

ArrayLike = Union[float, np.ndarray]

_KINDS = ("standard_quartic", "bounded_tail", "flat_wells", "custom")


@dataclass(frozen=True)
class Potential:
    """Immutable double-well potential.

    growth_constant is the largest c certified for the quadratic growth
    bound W(s) >= c (s -+ 1)^2 (None when the bound fails, as for the
    counterexample kinds).  Custom potentials carry piecewise polynomial
    coefficients: pieces[i] applies on [breakpoints[i], breakpoints[i+1])
    with np.polyval convention (highest degree first); the first and last
    pieces extend to -inf/+inf.
    """

    kind: str
    growth_constant: float | None = None
    well_locations: tuple[float, float] = (-1.0, 1.0)
    breakpoints: tuple[float, ...] = ()
    pieces: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.growth_constant is not None and not self.growth_constant > 0:
            raise ValueError("growth_constant must be positive when present")
        if self.kind == "custom":
            if len(self.pieces) != len(self.breakpoints) + 1:
                raise ValueError(
                    "custom potential needs len(pieces) == len(breakpoints) + 1"
                )


standard_quartic = Potential("standard_quartic", growth_constant=0.25)
bounded_tail = Potential("bounded_tail")
flat_wells = Potential("flat_wells")


def piecewise_potential(
    breakpoints: tuple[float, ...], pieces: tuple[tuple[float, ...], ...]
) -> Potential:
    return Potential("custom", breakpoints=tuple(breakpoints), pieces=tuple(pieces))


def make_counterexample_potential(which: str) -> Potential:
    """Potentials breaking one growth condition each.

    ``bounded_tail`` matches the quartic on [-2, 2] and is constant outside
    (continuous, so W/s^2 -> 0 at infinity); ``flat_wells`` is
    (s^2 - 1)^4 / 4, tangent to zero at fourth order at the wells.
    """
    if which == "bounded_tail":
        return bounded_tail
    if which == "flat_wells":
        return flat_wells
    raise ValueError(f"no counterexample potential named {which!r}")


def potential_by_name(name: str) -> Potential:
    if name == "standard_quartic":
        return standard_quartic
    if name in ("bounded_tail", "flat_wells"):
        return make_counterexample_potential(name)
    raise ValueError(f"unknown potential name {name!r}")


def _piecewise_index(p: Potential, s: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.asarray(p.breakpoints), s, side="right")


def eval_w(p: Potential, s: ArrayLike) -> ArrayLike:
    """Evaluate W(s); accepts scalars or arrays."""
    arr = np.asarray(s, dtype=float)
    if p.kind == "standard_quartic":
        out = (arr**2 - 1.0) ** 2 / 4.0
    elif p.kind == "flat_wells":
        out = (arr**2 - 1.0) ** 4 / 4.0
    elif p.kind == "bounded_tail":
        clipped = np.clip(arr, -2.0, 2.0)
        out = (clipped**2 - 1.0) ** 2 / 4.0
    else:
        idx = _piecewise_index(p, arr)
        out = np.empty_like(arr)
        for i, coeffs in enumerate(p.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = np.polyval(coeffs, arr[mask])
    return out if np.ndim(s) else float(out)


def eval_dw(p: Potential, s: ArrayLike) -> ArrayLike:
    """Evaluate W'(s).

    For ``bounded_tail`` the derivative at the C^0 kinks +-2 takes the inner
    (quartic) one-sided value.  A custom potential is rejected at a
    breakpoint where its one-sided derivatives disagree.
    """
    arr = np.asarray(s, dtype=float)
    if p.kind == "standard_quartic":
        out = arr * (arr**2 - 1.0)
    elif p.kind == "flat_wells":
        out = 2.0 * arr * (arr**2 - 1.0) ** 3
    elif p.kind == "bounded_tail":
        out = np.where(np.abs(arr) <= 2.0, arr * (arr**2 - 1.0), 0.0)
    else:
        derivs = [np.polyder(np.poly1d(c)) for c in p.pieces]
        for j, bp in enumerate(p.breakpoints):
            if np.any(arr == bp):
                left, right = derivs[j](bp), derivs[j + 1](bp)
                if abs(left - right) > 1e-9 * (1.0 + abs(left)):
                    raise ValueError(
                        f"custom potential is not differentiable at s={bp}"
                    )
        idx = _piecewise_index(p, arr)
        out = np.empty_like(arr)
        for i, d in enumerate(derivs):
            mask = idx == i
            if np.any(mask):
                out[mask] = d(arr[mask])
    return out if np.ndim(s) else float(out)


@dataclass(frozen=True)
class GrowthCheck:
    """Outcome of the quadratic-growth sampling check."""

    satisfied: bool
    witness: float
    slack: float


def verify_growth(
    p: Potential, c: float, sample_count: int = 10001, s_max: float = 50.0
) -> GrowthCheck:
    """Sample-check W(s) >= c (s - 1)^2 on s >= 0 and W(s) >= c (s + 1)^2 on s <= 0.

    Samples uniformly on [-s_max, s_max]; returns the sample of minimal
    slack as witness.  Sampling-based only: a true result certifies nothing
    between sample points.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    if not c > 0:
        raise ValueError("growth constant c must be positive")
    s = np.linspace(-s_max, s_max, sample_count)
    w = np.asarray(eval_w(p, s))
    target = np.where(s >= 0, (s - 1.0) ** 2, (s + 1.0) ** 2)
    slack = w - c * target
    i = int(np.argmin(slack))
    return GrowthCheck(bool(slack[i] >= 0.0), float(s[i]), float(slack[i]))

"""Experiment harness: sweeps, scaling tables, blow-up probes, reports, CLI.

Sweeps minimize the second-order energy over a (k, epsilon) grid and
classify each minimizer as a sharp-interface or oscillatory configuration.
The scaling table pins Dirichlet data forcing a prescribed number of
transitions and compares minimal energies against the per-interface cost
from the profile module; the blow-up probe tracks the negative-energy
oscillatory regime.  Reports serialize to CSV, JSON, and self-contained
SVG.  All randomness is seeded per cell, so identical configurations
reproduce identical output bytes.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import inequalities
from .energy import EnergyParams, energy_second_order, second_order_objective
from .field_core import (
    BoundarySpec,
    EndCondition,
    Field,
    field_to_csv,
    make_grid,
    random_smooth_field,
)
from .optimizer import SolveOptions, minimize_energy
from .potential import (
    Potential,
    piecewise_potential,
    potential_by_name,
    standard_quartic,
    verify_growth,
)
from .profile import optimal_profile

__all__ = [
    "ExperimentConfig",
    "SweepRecord",
    "GammaRow",
    "BlowupRow",
    "count_transitions",
    "count_oscillations",
    "run_sweep",
    "gamma_limit_table",
    "blowup_probe",
    "emit_report",
    "load_config",
    "run_verification_suites",
    "main",
]

OSCILLATION_ONSET = 0.9481  # certified onset of the negative-energy regime

SWEEP_COLUMNS = (
    "k",
    "epsilon",
    "total_energy",
    "potential_term",
    "gradient_term",
    "curvature_term",
    "transitions",
    "oscillations",
    "converged",
)


@dataclass(frozen=True)
class ExperimentConfig:
    potential: Potential
    a: float
    b: float
    n: int
    boundary: BoundarySpec
    k_values: tuple[float, ...]
    epsilon_values: tuple[float, ...]
    options: SolveOptions
    out_dir: str = "out"

    def __post_init__(self):
        if not self.k_values or not self.epsilon_values:
            raise ValueError("k_values and epsilon_values must be nonempty")

    def resolution_warnings(self) -> list[str]:
        h = (self.b - self.a) / (self.n - 1)
        return [
            f"h = {h:.3g} exceeds epsilon/8 = {eps / 8:.3g}; transition layers "
            f"of width O(epsilon) are under-resolved at epsilon = {eps}"
            for eps in self.epsilon_values
            if h > eps / 8.0
        ]


@dataclass(frozen=True)
class SweepRecord:
    k: float
    epsilon: float
    total_energy: float
    potential_term: float
    gradient_term: float
    curvature_term: float
    transitions: int
    oscillations: int
    converged: bool

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in SWEEP_COLUMNS)


@dataclass(frozen=True)
class GammaRow:
    epsilon: float
    n: int
    min_energy: float
    target: float
    abs_error: float
    converged: bool


@dataclass(frozen=True)
class BlowupRow:
    epsilon: float
    min_energy: float
    oscillations: int
    converged: bool


# -- minimizer classification -------------------------------------------------


def count_transitions(u: Field, threshold: float = 0.9) -> int:
    """Number of well-to-well crossings, counted with hysteresis.

    Only excursions reaching beyond -+threshold on both sides count, so
    overshoot ripples inside a well are not extra jumps.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    v = u.values
    signs = np.sign(v[np.abs(v) >= threshold])
    if signs.size == 0:
        return 0
    collapsed = signs[np.concatenate(([True], signs[1:] != signs[:-1]))]
    return int(collapsed.size - 1)


def count_oscillations(u: Field, floor: float = 1e-3) -> int:
    """Strict sign changes of the discrete derivative, noise-filtered.

    A turning point counts only when the swing to both neighbouring
    extrema (domain endpoints included) exceeds the noise floor.
    """
    dv = np.diff(u.values)
    s = np.sign(dv)
    turning = [
        i + 1
        for i in range(s.size - 1)
        if s[i] != 0 and s[i + 1] != 0 and s[i] != s[i + 1]
    ]
    extrema = [u.values[0]] + [u.values[t] for t in turning] + [u.values[-1]]
    count = 0
    for j in range(1, len(extrema) - 1):
        if (
            abs(extrema[j] - extrema[j - 1]) > floor
            and abs(extrema[j + 1] - extrema[j]) > floor
        ):
            count += 1
    return count


# -- experiments ---------------------------------------------------------------


def _apply_fixed_values(values: np.ndarray, bc: BoundarySpec) -> np.ndarray:
    if bc.left.fixes_value:
        values[0] = bc.left.value
    if bc.right.fixes_value:
        values[-1] = bc.right.value
    return values


def _cell_initials(grid, bc, epsilon, rng):
    x = grid.nodes()
    mid = 0.5 * (grid.a + grid.b)
    tanh_init = np.tanh((x - mid) / (2.0 * epsilon))
    rough = random_smooth_field(grid, rng, amplitude=1.0).values
    return [
        _apply_fixed_values(tanh_init, bc),
        _apply_fixed_values(rough, bc),
    ]


def run_sweep(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Minimize the second-order energy for each (k, epsilon) cell.

    Each cell starts from a transition-shaped initial and a seeded smooth
    random initial; the lower energy wins.  Failures are recorded as
    non-converged rows and the sweep continues.
    """
    grid = make_grid(cfg.a, cfg.b, cfg.n)
    records = []
    for ik, k in enumerate(cfg.k_values):
        for ie, eps in enumerate(cfg.epsilon_values):
            cell_seed = int(
                np.random.SeedSequence([cfg.options.seed, ik, ie]).generate_state(1)[0]
            )
            rng = np.random.default_rng(cell_seed)
            params = EnergyParams(eps, k, cfg.potential)
            objective = second_order_objective(grid, params, cfg.boundary)
            opts = SolveOptions(
                max_iterations=cfg.options.max_iterations,
                gradient_tolerance=cfg.options.gradient_tolerance,
                memory=cfg.options.memory,
                multistart_count=cfg.options.multistart_count,
                seed=cell_seed,
            )
            best = None
            try:
                for init in _cell_initials(grid, cfg.boundary, eps, rng):
                    report = minimize_energy(
                        Field(grid, init), objective, cfg.boundary, opts
                    )
                    if best is None or report.energy < best.energy:
                        best = report
                breakdown = energy_second_order(best.minimizer, params, cfg.boundary)
                records.append(
                    SweepRecord(
                        k=k,
                        epsilon=eps,
                        total_energy=breakdown.total,
                        potential_term=breakdown.potential_term,
                        gradient_term=breakdown.gradient_term,
                        curvature_term=breakdown.curvature_term,
                        transitions=count_transitions(best.minimizer),
                        oscillations=count_oscillations(best.minimizer),
                        converged=best.converged,
                    )
                )
            except (ValueError, RuntimeError):
                records.append(
                    SweepRecord(k, eps, math.nan, math.nan, math.nan, math.nan, 0, 0, False)
                )
    return records


def gamma_limit_table(
    k: float,
    epsilon_values,
    jumps: int,
    opts: SolveOptions | None = None,
    domain: tuple[float, float] = (0.0, 0.5),
    potential: Potential = standard_quartic,
) -> tuple[float, list[GammaRow]]:
    """Minimal energies under Dirichlet data forcing `jumps` transitions,
    tabulated against jumps * m_k.

    One jump pins u = -1 and u = +1 at the ends; two jumps pin both ends at
    -1 with one interior node held at +1 (an experimental control, not a
    claim about unconstrained minimizers).  Returns (m_k, rows).
    """
    if jumps not in (1, 2):
        raise ValueError("jumps must be 1 or 2")
    eps_list = tuple(epsilon_values)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon_values must be strictly decreasing")
    if not k < 0.125:
        raise ValueError(
            "gamma table needs k below the certified stability bound 1/8"
        )
    opts = opts if opts is not None else SolveOptions(
        max_iterations=4000, gradient_tolerance=3e-7
    )
    m_k = optimal_profile(k, potential=potential).m_k
    a, b = domain
    rows = []
    for eps in eps_list:
        n = max(1001, int(round(80.0 * (b - a) / eps)) + 1)
        grid = make_grid(a, b, n)
        x = grid.nodes()
        if jumps == 1:
            bc = BoundarySpec.dirichlet(-1.0, 1.0)
            init = np.tanh((x - 0.5 * (a + b)) / (2.0 * eps))
            pinned = None
        else:
            bc = BoundarySpec.dirichlet(-1.0, -1.0)
            t1, t2 = a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0
            init = np.tanh((x - t1) / (2.0 * eps)) * np.tanh(-(x - t2) / (2.0 * eps))
            mid = n // 2
            init[mid] = 1.0
            pinned = {mid: 1.0}
        _apply_fixed_values(init, bc)
        objective = second_order_objective(grid, EnergyParams(eps, k, potential), bc)
        report = minimize_energy(Field(grid, init), objective, bc, opts, pinned=pinned)
        target = jumps * m_k
        rows.append(
            GammaRow(
                epsilon=eps,
                n=n,
                min_energy=report.energy,
                target=target,
                abs_error=abs(report.energy - target),
                converged=report.converged,
            )
        )
    return m_k, rows


def blowup_probe(
    k: float,
    epsilon_values,
    opts: SolveOptions | None = None,
    domain: tuple[float, float] = (0.0, 1.0),
    n: int = 2001,
    potential: Potential = standard_quartic,
) -> list[BlowupRow]:
    """Free-boundary minimization in the oscillatory regime k > 0.9481.

    Seeds several oscillation periods per epsilon and keeps the best; the
    returned energies must be strictly decreasing along the epsilon list
    (raised otherwise), witnessing the unbounded-from-below limit.
    """
    if not k > OSCILLATION_ONSET:
        raise ValueError(f"blow-up probe needs k > {OSCILLATION_ONSET}")
    eps_list = tuple(epsilon_values)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon_values must be strictly decreasing")
    opts = opts if opts is not None else SolveOptions(
        max_iterations=3000, gradient_tolerance=1e-6
    )
    a, b = domain
    grid = make_grid(a, b, n)
    bc = BoundarySpec.free()
    x = grid.nodes()
    rows = []
    for ie, eps in enumerate(eps_list):
        rng = np.random.default_rng(
            int(np.random.SeedSequence([opts.seed, ie]).generate_state(1)[0])
        )
        seeds = [
            1.3 * np.sin(2.0 * np.pi * max(1, round((b - a) / (period * eps))) * (x - a))
            for period in (4.0, 6.0, 8.0, 10.0, 12.0)
        ]
        seeds.append(random_smooth_field(grid, rng, amplitude=1.2).values)
        objective = second_order_objective(grid, EnergyParams(eps, k, potential), bc)
        best = None
        for init in seeds:
            report = minimize_energy(Field(grid, init), objective, bc, opts)
            if best is None or report.energy < best.energy:
                best = report
        rows.append(
            BlowupRow(
                epsilon=eps,
                min_energy=best.energy,
                oscillations=count_oscillations(best.minimizer),
                converged=best.converged,
            )
        )
    energies = [r.min_energy for r in rows]
    if any(e2 >= e1 for e1, e2 in zip(energies, energies[1:])):
        raise RuntimeError(
            f"blow-up energies are not strictly decreasing: {energies}"
        )
    return rows


# -- reports -------------------------------------------------------------------


def _records_to_dicts(records) -> list[dict]:
    return [
        {name: getattr(r, name) for name in SWEEP_COLUMNS} for r in records
    ]


def sweep_records_to_csv(records) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in records:
        cells = []
        for value in r.as_row():
            if isinstance(value, bool):
                cells.append("true" if value else "false")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _svg_report(records) -> bytes:
    groups: dict[float, list] = {}
    for r in records:
        groups.setdefault(r.k, []).append(r)
    palette = ("#1b6ca8", "#c23b22", "#2e8540", "#7d3fbf", "#b8860b", "#008080")
    width, height = 640, 640
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(width),
        height=str(height),
        viewBox=f"0 0 {width} {height}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")

    # panel 1: energy vs epsilon, one polyline per k
    x0, y0, x1, y1 = 70, 40, 600, 280
    all_eps = sorted({r.epsilon for r in records})
    finite = [r.total_energy for r in records if math.isfinite(r.total_energy)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    if hi - lo < 1e-12:
        hi = lo + 1.0

    def ex(e):
        if len(all_eps) == 1:
            return 0.5 * (x0 + x1)
        t = (math.log(e) - math.log(all_eps[0])) / (
            math.log(all_eps[-1]) - math.log(all_eps[0])
        )
        return x0 + t * (x1 - x0)

    def ey(v):
        return y1 - (v - lo) / (hi - lo) * (y1 - y0)

    ET.SubElement(svg, "line", x1=str(x0), y1=str(y1), x2=str(x1), y2=str(y1), stroke="black")
    ET.SubElement(svg, "line", x1=str(x0), y1=str(y0), x2=str(x0), y2=str(y1), stroke="black")
    title = ET.SubElement(svg, "text", x=str(x0), y="25", **{"font-size": "14"})
    title.text = "minimal energy vs epsilon (log scale), one line per k"
    for idx, (k, rows) in enumerate(sorted(groups.items())):
        pts = " ".join(
            f"{ex(r.epsilon):.2f},{ey(r.total_energy):.2f}"
            for r in sorted(rows, key=lambda r: r.epsilon)
            if math.isfinite(r.total_energy)
        )
        color = palette[idx % len(palette)]
        if pts:
            ET.SubElement(
                svg, "polyline", points=pts, fill="none", stroke=color,
                **{"stroke-width": "2"},
            )
        label = ET.SubElement(
            svg, "text", x=str(x1 - 90), y=str(y0 + 16 * idx + 12),
            fill=color, **{"font-size": "12"},
        )
        label.text = f"k = {k:g}"

    # panel 2: oscillation-count heat map over the (k, epsilon) grid
    hx0, hy0 = 70, 340
    cell_w, cell_h = 48, 28
    ks = sorted(groups)
    max_osc = max((r.oscillations for r in records), default=0)
    title2 = ET.SubElement(svg, "text", x=str(hx0), y=str(hy0 - 12), **{"font-size": "14"})
    title2.text = "oscillation count heat map (rows: k, columns: epsilon)"
    for i, k in enumerate(ks):
        for j, e in enumerate(all_eps):
            rec = next((r for r in groups[k] if r.epsilon == e), None)
            frac = 0.0 if rec is None or max_osc == 0 else rec.oscillations / max_osc
            shade = int(255 * (1.0 - frac))
            ET.SubElement(
                svg, "rect",
                x=str(hx0 + j * cell_w), y=str(hy0 + i * cell_h),
                width=str(cell_w - 2), height=str(cell_h - 2),
                fill=f"rgb(255,{shade},{shade})", stroke="gray",
            )
            txt = ET.SubElement(
                svg, "text",
                x=str(hx0 + j * cell_w + 6), y=str(hy0 + i * cell_h + 18),
                **{"font-size": "11"},
            )
            txt.text = "-" if rec is None else str(rec.oscillations)
        lab = ET.SubElement(
            svg, "text", x="8", y=str(hy0 + i * cell_h + 18), **{"font-size": "11"}
        )
        lab.text = f"k={k:g}"
    for j, e in enumerate(all_eps):
        lab = ET.SubElement(
            svg, "text",
            x=str(hx0 + j * cell_w), y=str(hy0 + len(ks) * cell_h + 16),
            **{"font-size": "11"},
        )
        lab.text = f"{e:g}"
    return ET.tostring(svg, encoding="utf-8", xml_declaration=True)


def emit_report(records, fmt: str, path) -> Path:
    """Write sweep records as CSV, JSON, or SVG; returns the path written."""
    records = list(records)
    if not records:
        raise ValueError("no records to report")
    out = Path(path)
    if fmt == "csv":
        out.write_text(sweep_records_to_csv(records))
    elif fmt == "json":
        out.write_text(json.dumps(_records_to_dicts(records), indent=2) + "\n")
    elif fmt == "svg":
        out.write_bytes(_svg_report(records))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return out


# -- configuration ---------------------------------------------------------------


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_end_condition(text: str) -> EndCondition:
    parts = [p.strip() for p in text.split(":")]
    kind = parts[0]
    if kind == "free":
        return EndCondition.free()
    if kind == "value":
        return EndCondition.of_value(float(parts[1]))
    if kind == "clamped":
        return EndCondition.clamped(float(parts[1]), float(parts[2]))
    if kind == "slope":
        return EndCondition.of_slope(float(parts[1]))
    raise ValueError(f"unknown boundary condition {text!r}")


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration from a key-value (INI) file.

    See README for the documented keys; custom potentials are supplied as
    piecewise polynomial coefficient tables in a [custom_potential] section.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    exp = parser["experiment"]
    name = exp.get("potential", "standard_quartic")
    if name == "custom":
        custom = parser["custom_potential"]
        breakpoints = _parse_floats(custom["breakpoints"])
        pieces = tuple(
            _parse_floats(custom[f"piece_{i}"]) for i in range(len(breakpoints) + 1)
        )
        pot = piecewise_potential(breakpoints, pieces)
    else:
        pot = potential_by_name(name)
    options = SolveOptions(
        max_iterations=exp.getint("max_iterations", 2000),
        gradient_tolerance=exp.getfloat("gradient_tolerance", 1e-6),
        memory=exp.getint("memory", 10),
        multistart_count=exp.getint("multistart_count", 1),
        seed=exp.getint("seed", 0),
    )
    return ExperimentConfig(
        potential=pot,
        a=exp.getfloat("a", 0.0),
        b=exp.getfloat("b", 1.0),
        n=exp.getint("n", 1001),
        boundary=BoundarySpec(
            _parse_end_condition(exp.get("left", "free")),
            _parse_end_condition(exp.get("right", "free")),
        ),
        k_values=_parse_floats(exp["k_values"]),
        epsilon_values=_parse_floats(exp["epsilon_values"]),
        options=options,
        out_dir=exp.get("out_dir", "out"),
    )


# -- verification suites ----------------------------------------------------------


def run_verification_suites(seed: int = 0, trials: int = 100) -> list[tuple[str, bool, str]]:
    """Randomized inequality suites; returns (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    results = []
    tol = -1e-6

    growth = verify_growth(standard_quartic, 0.25, 10001, 50.0)
    results.append(
        (
            "quadratic growth (c = 1/4)",
            growth.satisfied,
            f"min slack {growth.slack:.3e} at s = {growth.witness:.3f}",
        )
    )

    grid = make_grid(0.0, 1.0, 2001)
    worst = math.inf
    for _ in range(trials):
        from .field_core import random_neumann_field

        u = random_neumann_field(grid, rng, amplitude=1.5)
        worst = min(worst, inequalities.check_jensen(u))
    results.append(("Jensen slope bound", worst >= tol, f"worst slack {worst:.3e}"))

    worst = math.inf
    for c in (0.1, 1.0, 10.0):
        for _ in range(trials):
            u = random_smooth_field(grid, rng, amplitude=1.5)
            worst = min(worst, inequalities.check_linear_interpolation(u, c))
    results.append(
        ("linear interpolation bound", worst >= tol, f"worst slack {worst:.3e}")
    )

    worst_res = 0.0
    for _ in range(trials):
        u = random_smooth_field(grid, rng, amplitude=1.5)
        for c in (0.1, 1.0):
            for sign in (1.0, -1.0):
                worst_res = max(
                    worst_res, inequalities.check_boundary_identity(u, c, sign)
                )
    results.append(
        ("pointwise square identity", worst_res <= 1e-12, f"max residual {worst_res:.3e}")
    )

    worst = math.inf
    for c in (0.1, 1.0, math.sqrt(2.0) * 0.05):
        for sign in (1.0, -1.0):
            for _ in range(trials):
                u = random_smooth_field(grid, rng, amplitude=1.5)
                worst = min(
                    worst, inequalities.boundary_interpolation_slack(u, c, sign)
                )
    results.append(
        ("integrated boundary interpolation", worst >= tol, f"worst slack {worst:.3e}")
    )

    k0 = 0.01
    tiling_ok = True
    detail = ""
    for m in (2, 3):
        gm = make_grid(0.0, float(m), m * 400 + 1)
        u = random_smooth_field(gm, rng, amplitude=1.2)
        parts, whole = inequalities.unit_tiling_slacks(u, k0)
        err = abs(sum(parts) - whole) / max(1.0, abs(whole))
        tiling_ok = tiling_ok and err <= 1e-6
        detail = f"relative split error {err:.3e}"
    results.append(("unit-interval tiling consistency", tiling_ok, detail))

    return results


# -- command line -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="out", help="output directory")
    p.add_argument(
        "--format",
        type=str,
        default="csv,json,svg",
        help="comma-separated report formats",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvwell",
        description="Second-order double-well phase-transition energy lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimize", help="minimize the energy for one (k, epsilon)")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--potential", type=str, default="standard_quartic")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2001)
    p.add_argument("--left", type=str, default="value:-1")
    p.add_argument("--right", type=str, default="value:1")
    _add_common(p)

    p = sub.add_parser("profile", help="optimal-profile constant m_k")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--T", type=float, default=6.0)
    p.add_argument("--n", type=int, default=1201)
    _add_common(p)

    p = sub.add_parser("k0", help="unit-interval interpolation constant estimate")
    p.add_argument("--n", type=int, default=1001)
    _add_common(p)

    p = sub.add_parser("k1", help="slope-constrained quotient constant estimate")
    p.add_argument("--n", type=int, default=2001)
    p.add_argument("--L", type=float, nargs="*", default=None)
    p.add_argument("--starts", type=int, default=8)
    _add_common(p)

    p = sub.add_parser("bounds", help="closed-form bounds on the quotient constant")
    _add_common(p)

    p = sub.add_parser("sweep", help="(k, epsilon) sweep from a config file")
    p.add_argument("--config", type=str, required=True)
    _add_common(p)

    p = sub.add_parser("gamma", help="sharp-interface scaling table")
    p.add_argument("--k", type=float, default=0.05)
    p.add_argument("--jumps", type=int, default=1, choices=(1, 2))
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    _add_common(p)

    p = sub.add_parser("blowup", help="negative-energy oscillation probe")
    p.add_argument("--k", type=float, default=1.2)
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    _add_common(p)

    p = sub.add_parser("verify", help="randomized inequality verification suites")
    p.add_argument("--trials", type=int, default=100)
    _add_common(p)

    return parser


def _ensure_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_minimize(args) -> int:
    grid = make_grid(args.a, args.b, args.n)
    bc = BoundarySpec(
        _parse_end_condition(args.left), _parse_end_condition(args.right)
    )
    pot = potential_by_name(args.potential)
    params = EnergyParams(args.epsilon, args.k, pot)
    rng = np.random.default_rng(args.seed)
    best = None
    for init in _cell_initials(grid, bc, args.epsilon, rng):
        report = minimize_energy(
            Field(grid, init),
            second_order_objective(grid, params, bc),
            bc,
            SolveOptions(max_iterations=4000, gradient_tolerance=1e-6, seed=args.seed),
        )
        if best is None or report.energy < best.energy:
            best = report
    breakdown = energy_second_order(best.minimizer, params, bc)
    out = _ensure_out(args)
    (out / "minimizer.csv").write_text(field_to_csv(best.minimizer))
    (out / "minimize.json").write_text(
        json.dumps(
            {
                "k": args.k,
                "epsilon": args.epsilon,
                "breakdown": breakdown.to_json_dict(),
                "transitions": count_transitions(best.minimizer),
                "oscillations": count_oscillations(best.minimizer),
                "report": best.to_json_dict(),
            },
            indent=2,
        )
    )
    print(
        f"minimized F[k={args.k}, eps={args.epsilon}]: total {breakdown.total:.8f} "
        f"(potential {breakdown.potential_term:.6f}, gradient {breakdown.gradient_term:.6f}, "
        f"curvature {breakdown.curvature_term:.6f}), transitions "
        f"{count_transitions(best.minimizer)}, oscillations {count_oscillations(best.minimizer)}"
    )
    print(f"wrote {out / 'minimizer.csv'} and {out / 'minimize.json'}")
    return 0


def _cmd_profile(args) -> int:
    result = optimal_profile(args.k, T=args.T, n=args.n)
    out = _ensure_out(args)
    (out / f"profile_k{args.k:g}.csv").write_text(field_to_csv(result.profile))
    (out / f"profile_k{args.k:g}.json").write_text(result.to_json())
    print(
        f"m_k(k={args.k}) = {result.m_k:.8f}  "
        f"[T = {result.truncation_T}, n = {result.n}, "
        f"tail residual {result.tail_residual:.2e}, "
        f"refinement delta {result.refinement_delta:.2e}]"
    )
    return 0


def _cmd_k0(args) -> int:
    value = inequalities.estimate_k0(
        args.n,
        SolveOptions(
            max_iterations=3000,
            gradient_tolerance=1e-7,
            multistart_count=8,
            seed=args.seed,
        ),
    )
    print(f"unit-interval interpolation constant estimate: {value:.8f} (n = {args.n})")
    return 0


def _cmd_k1(args) -> int:
    grid_L = tuple(args.L) if args.L else inequalities.DEFAULT_L_GRID
    opts = SolveOptions(
        max_iterations=3000,
        gradient_tolerance=1e-7,
        multistart_count=args.starts,
        seed=args.seed,
    )
    per_L = []
    for L in grid_L:
        est = inequalities.estimate_k1(L, args.n, opts)
        per_L.append(est)
        print(f"  L = {L:<6g} quotient = {est.quotient:.6f} converged = {est.converged}")
    best = min(per_L, key=lambda e: e.quotient)
    out = _ensure_out(args)
    (out / "k1.json").write_text(
        json.dumps([e.to_json_dict() for e in per_L], indent=2)
    )
    print(f"best quotient {best.quotient:.6f} at L = {best.L:g} (n = {args.n})")
    return 0


def _cmd_bounds(args) -> int:
    lower = inequalities.lower_bound_k1()
    h, L, value = inequalities.minimize_quadratic_family()
    print("lower bound: inf_L max(2/L^2, 1/max(8, 2(1 + 12/L^2)^2))")
    print(f"  = {lower!r}")
    print("upper bound: min over h, L of (I1 + I2)/I3 with")
    print("  I1 = L(128 h^8 - 336 h^4 + 315)/1260, I2 = 4 h^4/L^3, I3 = 4 h^4/(3 L)")
    print(f"  = {value:.6f} at h = {h:.6f}, L = {L:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    cfg = ExperimentConfig(
        potential=cfg.potential,
        a=cfg.a,
        b=cfg.b,
        n=cfg.n,
        boundary=cfg.boundary,
        k_values=cfg.k_values,
        epsilon_values=cfg.epsilon_values,
        options=SolveOptions(
            max_iterations=cfg.options.max_iterations,
            gradient_tolerance=cfg.options.gradient_tolerance,
            memory=cfg.options.memory,
            multistart_count=cfg.options.multistart_count,
            seed=args.seed if args.seed != 0 else cfg.options.seed,
        ),
        out_dir=args.out if args.out != "out" else cfg.out_dir,
    )
    for warning in cfg.resolution_warnings():
        print(f"warning: {warning}", file=sys.stderr)
    records = run_sweep(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for fmt in args.format.split(","):
        path = emit_report(records, fmt.strip(), out / f"sweep.{fmt.strip()}")
        print(f"wrote {path}")
    print(sweep_records_to_csv(records), end="")
    return 0


def _cmd_gamma(args) -> int:
    m_k, rows = gamma_limit_table(args.k, args.epsilons, args.jumps)
    print(f"m_k(k={args.k}) = {m_k:.8f}, target = {args.jumps} * m_k")
    for r in rows:
        print(
            f"  eps = {r.epsilon:<7g} n = {r.n:<6d} min energy = {r.min_energy:.8f} "
            f"|diff| = {r.abs_error:.3e} converged = {r.converged}"
        )
    return 0


def _cmd_blowup(args) -> int:
    rows = blowup_probe(args.k, args.epsilons)
    for r in rows:
        print(
            f"  eps = {r.epsilon:<7g} min energy = {r.min_energy:.6f} "
            f"oscillations = {r.oscillations} converged = {r.converged}"
        )
    print("energies strictly decreasing; negative-energy oscillatory regime confirmed")
    return 0


def _cmd_verify(args) -> int:
    results = run_verification_suites(seed=args.seed, trials=args.trials)
    failed = False
    for name, passed, detail in results:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        failed = failed or not passed
    return 2 if failed else 0


_COMMANDS = {
    "minimize": _cmd_minimize,
    "profile": _cmd_profile,
    "k0": _cmd_k0,
    "k1": _cmd_k1,
    "bounds": _cmd_bounds,
    "sweep": _cmd_sweep,
    "gamma": _cmd_gamma,
    "blowup": _cmd_blowup,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

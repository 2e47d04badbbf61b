"""Command-line front end: run a benchmark study and emit CSV reports.

The run writes, per requested report, ``sizes.csv`` (problem and active-set
sizes per level), ``cost.csv`` (objective, error against the reference,
observed order), ``multiplier.csv`` (dual error and observed order) and
``support.csv`` (the sparse plan of the finest level).  Figures of the
same data are rendered alongside unless disabled.  All numbers use the
dot decimal separator with 17 significant digits, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .active_set import DriverError, MultilevelParams, multilevel_solve
from .mesh import build_mesh
from .problems import (
    make_problem,
    multiplier_difference_error,
    multiplier_error,
    reference_cost,
)
from .transport_core import DEFAULT_FULL_LP_CAP, PolynomialCost

EMIT_CHOICES = ("sizes", "cost_error", "multiplier_error", "support")
DEFAULT_EMIT = ("sizes", "cost_error", "multiplier_error")


@dataclass
class RunConfig:
    example: str = "ex1"
    p: float = 2.0
    level_min: int = 0
    level_max: int = 0
    theta_act: float = 1.0
    c_opt: float = 1.0
    auto_tune_theta: bool = False
    out_dir: str = "."
    emit: tuple[str, ...] = DEFAULT_EMIT
    full_lp_cap: int = DEFAULT_FULL_LP_CAP
    seed: int = 0
    figures: bool = True


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def observed_order(errors) -> list[float]:
    """Orders log2(delta_2h / delta_h) from a sequence of (h, delta).

    Requires at least two entries with h halving between consecutive ones.
    A vanishing denominator yields +inf as the marker for "error hit zero".
    """
    errors = [(float(h), float(d)) for (h, d) in errors]
    if len(errors) < 2:
        raise ValueError("need at least two (h, error) entries")
    orders = []
    for (h_prev, d_prev), (h_next, d_next) in zip(errors, errors[1:]):
        if abs(h_next / h_prev - 0.5) > 1e-6:
            raise ValueError("mesh sizes must halve between entries")
        if d_next == 0.0:
            orders.append(math.inf)
        else:
            orders.append(math.log2(abs(d_prev) / abs(d_next)))
    return orders


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def run(config: RunConfig) -> int:
    """Execute one study and write the requested reports; returns 0."""
    for name in config.emit:
        if name not in EMIT_CHOICES:
            raise ValueError(f"unknown emit target {name!r}")
    problem = make_problem(config.example)
    cost = PolynomialCost(config.p)
    params = MultilevelParams(
        theta_act=config.theta_act,
        c_opt=config.c_opt,
        level_min=config.level_min,
        level_max=config.level_max,
        auto_tune_theta=config.auto_tune_theta,
    )
    results = multilevel_solve(
        problem, cost, params, full_lp_cap=config.full_lp_cap
    )
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    levels = [rep.level for (_, rep) in results]
    meshes_x = {lvl: build_mesh(problem.domain_x, lvl) for lvl in levels}
    meshes_y = {lvl: build_mesh(problem.domain_y, lvl) for lvl in levels}
    hs = {lvl: max(meshes_x[lvl].h, meshes_y[lvl].h) for lvl in levels}

    if "sizes" in config.emit:
        rows = [
            (rep.level, rep.m, rep.n, rep.m + rep.n, rep.m * rep.n,
             rep.active_cardinality, rep.tolerance_increases)
            for (_, rep) in results
        ]
        _write_csv(
            out / "sizes.csv",
            ["level", "M", "N", "M+N", "MN", "active", "tolerance_increases"],
            rows,
        )
        if config.figures:
            from . import figures

            figures.plot_active_set_growth(
                [r[0] for r in rows], [r[5] for r in rows],
                [r[4] for r in rows], out / "active_set_growth.png",
            )

    objectives = [rep.objective for (_, rep) in results]
    exact = problem.exact
    use_exact_cost = (
        config.p == 2.0 and exact is not None
        and exact.optimal_cost_p2 is not None
    )
    if use_exact_cost:
        ref = exact.optimal_cost_p2
    elif len(objectives) >= 2:
        ref = reference_cost(objectives)
    else:
        ref = None

    if "cost_error" in config.emit:
        deltas = [abs(ref - ob) if ref is not None else None
                  for ob in objectives]
        orders: list[float | None] = [None]
        for k in range(1, len(levels)):
            if deltas[k] is None:
                orders.append(None)
            elif deltas[k] == 0.0:
                orders.append(math.inf)
            else:
                orders.append(math.log2(abs(deltas[k - 1]) / deltas[k]))
        rows = [
            (levels[k], objectives[k], deltas[k], orders[k])
            for k in range(len(levels))
        ]
        _write_csv(
            out / "cost.csv",
            ["level", "objective", "delta_h", "observed_order"],
            rows,
        )
        if config.figures:
            from . import figures

            sizes = [rep.m + rep.n for (_, rep) in results]
            figures.plot_cost_convergence(
                sizes, deltas, problem.domain_x.dim, out / "cost_convergence.png",
            )

    if "multiplier_error" in config.emit:
        use_exact_mult = config.p == 2.0 and exact is not None
        rows = []
        errors = []
        if use_exact_mult:
            for (sol, rep) in results:
                errors.append(
                    (rep.level, multiplier_error(sol, problem, meshes_x[rep.level]))
                )
        else:
            # difference of dual solutions across one refinement
            for k in range(len(results) - 1):
                sol_c, rep_c = results[k]
                sol_f, rep_f = results[k + 1]
                errors.append(
                    (rep_c.level, multiplier_difference_error(
                        sol_c, sol_f, meshes_x[rep_c.level], meshes_x[rep_f.level]
                    ))
                )
        for k, (lvl, err) in enumerate(errors):
            if k == 0:
                order = None
            elif err == 0.0:
                order = math.inf
            else:
                order = math.log2(abs(errors[k - 1][1]) / err)
            rows.append((lvl, err, order))
        _write_csv(
            out / "multiplier.csv",
            ["level", "eps_h", "observed_order"],
            rows,
        )
        if config.figures and rows:
            from . import figures

            m_sizes = {rep.level: rep.m + rep.n for (_, rep) in results}
            figures.plot_multiplier_convergence(
                [m_sizes[lvl] for (lvl, _) in errors],
                [err for (_, err) in errors],
                problem.domain_x.dim,
                out / "multiplier_convergence.png",
            )

    if "support" in config.emit:
        sol, rep = results[-1]
        mesh_x = meshes_x[rep.level]
        mesh_y = meshes_y[rep.level]
        dim = problem.domain_x.dim
        if dim == 1:
            header = ["i", "j", "x", "y", "mass"]
        else:
            header = ["i", "j", "x0", "x1", "y0", "y1", "mass"]
        rows = []
        for (i, j), mass in zip(sol.plan_indices, sol.plan_values):
            xc = mesh_x.nodes[i]
            yc = mesh_y.nodes[j]
            rows.append((int(i), int(j), *xc, *yc, float(mass)))
        _write_csv(out / "support.csv", header, rows)
        if config.figures and dim == 1:
            from . import figures

            figures.plot_support_1d(
                [r[2] for r in rows], [r[3] for r in rows],
                [r[-1] for r in rows], out / "support_plan.png",
            )

    return 0


def _parse_levels(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"levels must look like a:b, got {text!r}"
        ) from exc


def _read_config_file(path: str) -> dict:
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce_bool(text: str) -> bool:
    low = text.lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otmas",
        description="Solve a benchmark transport problem on a range of "
        "levels and write convergence reports.",
    )
    parser.add_argument("--example", choices=["ex1", "ex2", "ex3", "ex4"])
    parser.add_argument("--p", type=float, help="cost exponent (default 2)")
    parser.add_argument("--levels", type=_parse_levels, metavar="A:B",
                        help="coarsest and finest level, e.g. 3:6")
    parser.add_argument("--theta-act", type=float, dest="theta_act",
                        help="activation constant (default 1)")
    parser.add_argument("--c-opt", type=float, dest="c_opt",
                        help="optimality tolerance constant (default 1)")
    parser.add_argument("--auto-tune-theta", action="store_true",
                        dest="auto_tune_theta", default=None,
                        help="calibrate theta-act on the coarsest level")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--emit", help="comma list from: "
                        + ", ".join(EMIT_CHOICES))
    parser.add_argument("--full-lp-cap", type=int, dest="full_lp_cap",
                        help="largest dense pair grid the full solver accepts")
    parser.add_argument("--seed", type=int,
                        help="seed recorded for randomized tooling")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    parser.add_argument("--config", help="key=value file; flags override it")
    return parser


def _config_from_sources(args) -> RunConfig:
    config = RunConfig()
    file_values = _read_config_file(args.config) if args.config else {}

    converters = {
        "example": str,
        "p": float,
        "levels": _parse_levels,
        "theta-act": float,
        "c-opt": float,
        "auto-tune-theta": _coerce_bool,
        "out": str,
        "emit": str,
        "full-lp-cap": int,
        "seed": int,
        "figures": _coerce_bool,
    }
    renames = {
        "theta-act": "theta_act",
        "c-opt": "c_opt",
        "auto-tune-theta": "auto_tune_theta",
        "out": "out_dir",
        "full-lp-cap": "full_lp_cap",
    }

    def apply(key: str, value):
        attr = renames.get(key, key)
        if key == "levels":
            config.level_min, config.level_max = value
        elif key == "emit":
            config.emit = tuple(
                part.strip() for part in value.split(",") if part.strip()
            )
        else:
            setattr(config, attr, value)

    for key, raw in file_values.items():
        if key not in converters:
            raise ValueError(f"unknown config key {key!r}")
        apply(key, converters[key](raw))

    if args.example is not None:
        apply("example", args.example)
    if args.p is not None:
        apply("p", args.p)
    if args.levels is not None:
        apply("levels", args.levels)
    if args.theta_act is not None:
        apply("theta-act", args.theta_act)
    if args.c_opt is not None:
        apply("c-opt", args.c_opt)
    if args.auto_tune_theta is not None:
        apply("auto-tune-theta", args.auto_tune_theta)
    if args.out_dir is not None:
        apply("out", args.out_dir)
    if args.emit is not None:
        apply("emit", args.emit)
    if args.full_lp_cap is not None:
        apply("full-lp-cap", args.full_lp_cap)
    if args.seed is not None:
        apply("seed", args.seed)
    if args.no_figures:
        config.figures = False
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_sources(args)
        return run(config)
    except (DriverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

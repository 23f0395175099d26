"""Command-line front end.

Usage::

    desira demo chemical --space square --out results
    desira sbo --config chemical.ini
    desira desirability-plot conversion
    desira mm eval design.csv
    desira mm improve design.csv --point 0.5,0.5
    desira mm explore --seed 1 --budget 40 --switch-after 10

Exit status is 0 on success, 1 on runtime or numerical failure and 2 on usage
or configuration errors. The default output directory is taken from
``DESIRA_OUT`` and falls back to the current directory.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from desira import svg
from desira.desirability import (
    DArb,
    DBox,
    DCategorical,
    DMax,
    DMin,
    DOverall,
    DTarget,
    from_text,
    non_informative,
    parse_inline,
    sample_curve,
)
from desira.errors import ConfigError, DesiraError, InvalidInputError, ZeroDistanceError
from desira.optim_nm import RegionSpec, multistart_maximize_desirability, search_grid
from desira.result import fmt17
from desira.rsm import activity_pred, chemical_grid_functions, conversion_pred, fun_myer16a, generate_plot_grid
from desira.spacefill import (
    ackley,
    clustered_design,
    explore_exploit_run,
    infill_diagnostics,
    mm_improvement,
    mmphi,
    mmphi_intensive,
    read_design,
    write_design,
    write_diagnostics,
)
from desira.surrogate import SboConfig, desirability_hook, first_objective, pareto_mask, sbo_minimize, weighted_mo2so

logger = logging.getLogger("desira")

OUT_ENV = "DESIRA_OUT"
AXIAL = 1.682


class UsageError(DesiraError):
    """Bad flags, configuration or spec references (exit status 2)."""


def _h(value: float) -> str:
    """Human-readable number with 6 significant digits."""
    return format(float(value), ".6g")


def _vec(x) -> str:
    return "[" + ", ".join(_h(v) for v in x) + "]"


def _out_dir(value: str | None) -> Path:
    path = Path(value or os.environ.get(OUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_table(path) -> pd.DataFrame:
    """Read any CSV table written by this tool, preserving every float bit."""
    return pd.read_csv(path, float_precision="round_trip")


def chemical_overall() -> DOverall:
    return DOverall(DMax(80, 97), DTarget(55, 57.5, 60))


def builtin_specs() -> dict:
    x = np.linspace(-5, 5, 20)
    return {
        "conversion": DMax(80, 97),
        "activity": DTarget(55, 57.5, 60),
        "logistic": DArb(x, 1 / (1 + np.exp(-x))),
        "box": DBox(-AXIAL, AXIAL),
        "categorical": DCategorical({"value1": 0.1, "value2": 0.9, "value3": 0.2}),
        "loss": DMin(6, 6000, scale=2),
        "epochs": DMin(32, 1024, scale=0.2),
        "mm": DMax(-0.1, 1.1, scale=2),
    }


def resolve_spec(ref: str):
    """Builtin name, inline declaration (``max low=80 high=97``) or key-value file."""
    builtins = builtin_specs()
    if ref in builtins:
        return builtins[ref]
    try:
        if Path(ref).is_file():
            return from_text(Path(ref).read_text())
        if "=" in ref:
            return parse_inline(ref)
    except InvalidInputError as exc:
        raise UsageError(f"cannot resolve desirability {ref!r}: {exc}") from None
    raise UsageError(f"unknown desirability {ref!r}; builtins are {', '.join(builtins)}")


# -- demo chemical --------------------------------------------------------------


def cmd_demo_chemical(args) -> int:
    overall = chemical_overall()
    region = RegionSpec(args.space, AXIAL)
    result = multistart_maximize_desirability(overall, [conversion_pred, activity_pred], region, search_grid())
    x = result.x_best
    D = -result.f_best
    conv, act = conversion_pred(x), activity_pred(x)
    print(f"space: {args.space}")
    print(f"best x: {_vec(x)}")
    print(f"best desirability: {_h(D)}")
    print(f"conversion: {_h(conv)}")
    print(f"activity: {_h(act)}")

    out = _out_dir(args.out)
    grid = generate_plot_grid(
        {"time": (-AXIAL, AXIAL), "catalyst": (-AXIAL, AXIAL)},
        {"time": args.resolution, "catalyst": args.resolution},
        chemical_grid_functions(),
        facet_levels={"temperature": [x[1]]},
    )
    grid["desirability"] = overall.predict(grid[["conversionPred", "activityPred"]].to_numpy())
    path = out / f"chemical_{args.space}_grid.csv"
    _write_csv(path, list(grid.columns), [[fmt17(v) for v in row] for row in grid.to_numpy()])
    with open(out / f"chemical_{args.space}_best.json", "w") as fh:
        json.dump({"x_best": list(map(float, x)), "desirability": D, "conversion": conv, "activity": act}, fh, indent=2)
        fh.write("\n")
    print(f"grid: {path}")
    return 0


# -- sbo ------------------------------------------------------------------------

PROBLEMS = {"chemical": fun_myer16a, "ackley": ackley}


@dataclass
class RunConfig:
    problem: str
    sbo: SboConfig
    pareto: list[str] | None
    desirability: DOverall | None


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=", 1)[0].strip().lower() == key:
            return lineno
    return None


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def load_run_config(path) -> RunConfig:
    """Parse an INI run configuration; errors carry the offending line number."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    def fail(section, key, msg):
        line = _line_of(text, section, key)
        where = f"{path}:{line}" if line else f"{path} [{section}]"
        raise ConfigError(f"{where}: {key}: {msg}")

    if not parser.has_section("sbo"):
        raise ConfigError(f"{path}: missing [sbo] section")
    sec = parser["sbo"]
    known = {
        "problem", "seed", "lower", "upper", "n_initial", "max_iter", "max_surrogate_points",
        "gp_restarts", "n_candidates", "n_refine", "infill", "mo2so", "weights", "pareto",
    }
    for key in sec:
        if key not in known:
            fail("sbo", key, "unknown key")

    def get(key, conv, default=None, required=False):
        if key not in sec:
            if required:
                raise ConfigError(f"{path} [sbo]: missing required key {key!r}")
            return default
        try:
            return conv(sec[key])
        except ValueError as exc:
            fail("sbo", key, f"invalid value {sec[key]!r} ({exc})")

    problem = get("problem", str, "chemical")
    if problem not in PROBLEMS:
        fail("sbo", "problem", f"unknown problem {problem!r}; choose from {sorted(PROBLEMS)}")
    seed = get("seed", int, required=True)
    lower = get("lower", _floats, required=True)
    upper = get("upper", _floats, required=True)
    if len(lower) != len(upper):
        fail("sbo", "upper", "lower and upper differ in length")

    desir = None
    if parser.has_section("desirability"):
        comps = []
        for key, raw in parser["desirability"].items():
            try:
                comps.append(parse_inline(raw))
            except InvalidInputError as exc:
                fail("desirability", key, str(exc))
        if comps:
            desir = DOverall(*comps)

    mode = get("mo2so", str, "desirability" if desir else "first")
    if mode == "desirability":
        if desir is None:
            fail("sbo", "mo2so", "needs a non-empty [desirability] section")
        mo2so = desirability_hook(desir)
    elif mode == "weighted":
        mo2so = weighted_mo2so(get("weights", _floats, required=True))
    elif mode == "first":
        mo2so = first_objective
    else:
        fail("sbo", "mo2so", f"expected desirability, weighted or first, got {mode!r}")

    pareto = get("pareto", lambda s: [v.strip() for v in s.split(",")])
    if pareto is not None and any(s not in ("min", "max") for s in pareto):
        fail("sbo", "pareto", "entries must be 'min' or 'max'")

    options = {}
    for key in ("n_initial", "max_iter", "max_surrogate_points", "gp_restarts", "n_candidates", "n_refine"):
        value = get(key, int)
        if value is not None:
            options[key] = value
    if "infill" in sec:
        options["infill"] = sec["infill"].strip()
    try:
        config = SboConfig(bounds=list(zip(lower, upper)), seed=seed, mo2so=mo2so, **options)
    except InvalidInputError as exc:
        raise ConfigError(f"{path} [sbo]: {exc}") from None
    return RunConfig(problem, config, pareto, desir)


def cmd_sbo(args) -> int:
    cfg = load_run_config(args.config)
    result = sbo_minimize(PROBLEMS[cfg.problem], cfg.sbo)
    out = _out_dir(args.out)
    result.write_trace(out / "trace.csv")
    result.write_summary(out / "summary.json")
    best_so_far = np.minimum.accumulate(result.y)
    _write_csv(
        out / "progress.csv",
        ["eval", "y_scalar", "best_so_far"],
        [[i, fmt17(y), fmt17(b)] for i, (y, b) in enumerate(zip(result.y, best_so_far))],
    )
    if cfg.pareto is not None:
        mask = pareto_mask(result.Y_mo, cfg.pareto)
        m = result.Y_mo.shape[1]
        _write_csv(
            out / "pareto.csv",
            ["eval"] + [f"y_mo{j + 1}" for j in range(m)],
            [[i] + [fmt17(v) for v in result.Y_mo[i]] for i in np.flatnonzero(mask)],
        )
    print(f"evaluations: {result.nfev}")
    print(f"best x: {_vec(result.x_best)}")
    print(f"best objective: {_h(result.f_best)}")
    print(f"output: {out}")
    return 0


# -- desirability-plot ------------------------------------------------------------


def cmd_desirability_plot(args) -> int:
    spec = resolve_spec(args.spec)
    name = args.name or (args.spec if args.spec in builtin_specs() else "desirability")
    out = _out_dir(args.out)
    ni = non_informative(spec)
    if isinstance(spec, DCategorical):
        labels, values = list(spec.values), list(spec.values.values())
        _write_csv(out / f"{name}.csv", ["category", "desirability"], [[k, fmt17(v)] for k, v in zip(labels, values)])
        doc = svg.bar_chart(labels, values, title=name, ylabel="desirability", hline=ni)
    else:
        x, d = sample_curve(spec, n=args.points)
        _write_csv(out / f"{name}.csv", ["input", "desirability"], [[fmt17(a), fmt17(b)] for a, b in zip(x, d)])
        doc = svg.line_chart(x, d, title=name, xlabel="input", ylabel="desirability", hline=ni, ylim=(0.0, 1.0))
    (out / f"{name}.svg").write_text(doc)
    print(f"non-informative value: {_h(ni)}")
    print(f"wrote {out / (name + '.csv')} and {out / (name + '.svg')}")
    return 0


# -- mm ---------------------------------------------------------------------------


def _read_plan(path):
    try:
        return read_design(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read design {path}: {exc}") from None


def cmd_mm_eval(args) -> int:
    plan = _read_plan(args.design)
    phi = mmphi(plan, args.q, args.p)
    phi_i, J, d = mmphi_intensive(plan, args.q, args.p)
    print(f"Phi_q: {phi!r}")
    print(f"Phi_q_intensive: {phi_i!r}")
    print("distance,multiplicity")
    for di, ji in zip(d, J):
        print(f"{fmt17(di)},{ji}")
    return 0


def cmd_mm_improve(args) -> int:
    plan = _read_plan(args.design)
    try:
        point = _floats(args.point)
    except ValueError:
        raise UsageError(f"bad point {args.point!r}") from None
    value = mm_improvement(plan, point, args.q, args.p)
    print(f"improvement: {value!r}")
    return 0


def cmd_mm_explore(args) -> int:
    k = args.k
    bounds = [(args.low, args.high)] * k
    if args.design:
        X0 = _read_plan(args.design)
        if X0.k != k:
            raise UsageError(f"design has {X0.k} columns but --k is {k}")
    else:
        center = [args.center] * k
        X0 = clustered_design(args.n, k, center, args.spread, args.seed, bounds)
    res = explore_exploit_run(
        ackley, bounds, X0, budget=args.budget, switch_after=args.switch_after, seed=args.seed, n_initial=args.n_initial
    )
    out = _out_dir(args.out)
    write_design(out / "design.csv", X0)
    res.write_trace(out / "explore_trace.csv")
    diags = infill_diagnostics(X0, res.best_x, bins=args.bins)
    write_diagnostics(diags, out / "diagnostics.csv", out / "diagnostics_summary.csv")
    summary = {
        "best_x": list(map(float, res.best_x)),
        "best_f": res.best_f,
        "f_ref": res.f_ref,
        "phase1_points": int(np.sum(res.phase == 1)),
        "phase2_points": int(np.sum(res.phase == 2)),
        "evaluations": int(res.run.nfev),
    }
    with open(out / "explore_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"best x: {_vec(res.best_x)}")
    print(f"best f: {_h(res.best_f)}")
    print(f"phase 1 points: {summary['phase1_points']}, phase 2 points: {summary['phase2_points']}")
    return 0


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="desira", description="Desirability-based multi-objective optimization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="reproduce the chemical-reaction example")
    demo_sub = demo.add_subparsers(dest="demo", required=True)
    chem = demo_sub.add_parser("chemical")
    chem.add_argument("--space", choices=["square", "circular"], default="square")
    chem.add_argument("--resolution", type=int, default=41)
    chem.add_argument("--out")
    chem.set_defaults(func=cmd_demo_chemical)

    sbo = sub.add_parser("sbo", help="surrogate-based optimization from a config file")
    sbo.add_argument("--config", required=True)
    sbo.add_argument("--out")
    sbo.set_defaults(func=cmd_sbo)

    plot = sub.add_parser("desirability-plot", help="curve CSV and SVG of a desirability")
    plot.add_argument("spec", help="builtin name, inline declaration or key-value file")
    plot.add_argument("--name")
    plot.add_argument("--points", type=int, default=201)
    plot.add_argument("--out")
    plot.set_defaults(func=cmd_desirability_plot)

    mm = sub.add_parser("mm", help="Morris-Mitchell design scoring")
    mm_sub = mm.add_subparsers(dest="mm", required=True)
    for name, func in (("eval", cmd_mm_eval), ("improve", cmd_mm_improve)):
        p = mm_sub.add_parser(name)
        p.add_argument("design", help="headerless CSV, one point per row")
        p.add_argument("--q", type=float, default=2.0)
        p.add_argument("--p", type=float, default=2.0)
        if name == "improve":
            p.add_argument("--point", required=True, help="comma-separated coordinates")
        p.set_defaults(func=func)
    ex = mm_sub.add_parser("explore")
    ex.add_argument("--seed", type=int, required=True)
    ex.add_argument("--design", help="initial design CSV; a clustered design is generated otherwise")
    ex.add_argument("--k", type=int, default=2)
    ex.add_argument("--n", type=int, default=10)
    ex.add_argument("--center", type=float, default=1.5)
    ex.add_argument("--spread", type=float, default=0.1)
    ex.add_argument("--low", type=float, default=-2.0)
    ex.add_argument("--high", type=float, default=2.0)
    ex.add_argument("--budget", type=int, default=40)
    ex.add_argument("--n-initial", type=int, default=10)
    ex.add_argument("--switch-after", type=int, default=10)
    ex.add_argument("--bins", type=int, default=10)
    ex.add_argument("--out")
    ex.set_defaults(func=cmd_mm_explore)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"desira: error: {exc}", file=sys.stderr)
        return 2
    except ZeroDistanceError as exc:
        print(f"desira: zero distance: {exc}", file=sys.stderr)
        return 1
    except (DesiraError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"desira: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: solve, sweep, asympt, compare.

Exit codes: 0 success, 2 invalid configuration, 3 a point did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import asymptotics
from .model import FAMILIES, AbstentionBudget, TaskKind, build_cost_matrix, fiducial_from_file, make_fiducial
from .solver import critical_abstention, solve_abstention, top_eigenpair

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

FIELDS = ("q", "qbar", "lambda", "delta", "fidelity", "one_minus_f", "scaled_smin", "q_star", "kkt_residual", "iterations", "converged")
COMPARE_FIELDS = FIELDS + ("asymptotic_smin", "rel_dev")
ASYMPT_FIELDS = ("q", "scaled_smin", "smin", "fidelity", "regime_tag", "parameter")

FAMILY_ALIASES = {"flat": "flat_phase", "povm": "povm_seed_direction", "ramp": "linear_ramp"}
# families tied to one task; the rest work with any cost matrix
FAMILY_TASKS = {
    "equator": {TaskKind.PHASE, TaskKind.FRAME_DEGENERATE},
    "povm_seed_direction": {TaskKind.DIRECTION},
    "antiparallel": {TaskKind.DIRECTION},
}
HEISENBERG_FAMILIES = {"flat_phase", "povm_seed_direction"}


@dataclass(frozen=True)
class Preset:
    scenario: str
    grids: dict  # n -> (start, stop, step)


PRESETS = {
    "fig1": Preset("phase_flat", {30: (0.05, 0.95, 0.05)}),
    "fig2": Preset("phase_equator", {100: (0.05, 0.95, 0.05)}),
    "fig4": Preset("direction_povm", {120: (0.05, 0.45, 0.05), 50: (0.3, 0.95, 0.05)}),
    "fig5": Preset("direction_antiparallel", {100: (0.05, 0.95, 0.05)}),
    "fig6": Preset("frame_rydberg_implicit", {90: (0.05, 0.9, 0.05), 20: (0.05, 0.9, 0.05)}),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: TaskKind
    family: str
    n: int
    qs: list
    scenario: str | None
    fmt: str
    out: str | None
    seed: int
    coeff_file: str | None = None


def parse_grid(text: str) -> list:
    """'start:stop:step' (stop inclusive) -> list of q values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"q grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"q grid has a non-numeric field: {text!r}") from None
    return make_grid(start, stop, step)


def make_grid(start, stop, step) -> list:
    if not step > 0:
        raise ConfigError("q grid step must be > 0")
    if stop < start:
        raise ConfigError("q grid is empty (stop < start)")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def _check_q(q):
    if not (math.isfinite(q) and 0.0 <= q < 1.0):
        raise ConfigError(f"q must lie in [0, 1), got {q}")


def _family(name):
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}")
    return name


def build_config(args) -> RunConfig:
    preset = None
    scenario = getattr(args, "scenario", None)
    if getattr(args, "preset", None):
        try:
            preset = PRESETS[args.preset]
        except KeyError:
            raise ConfigError(f"unknown preset {args.preset!r} (choose from {', '.join(PRESETS)})") from None
        scenario = preset.scenario
    if scenario is not None and scenario not in asymptotics.SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    if scenario is not None:
        task_name, fam_name, _, _ = asymptotics.SCENARIOS[scenario]
        task = TaskKind.parse(args.task or task_name)
        family = _family(args.family or fam_name)
    else:
        if args.task is None:
            raise ConfigError("--task is required")
        try:
            task = TaskKind.parse(args.task)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        family = _family(args.family or ("custom" if args.coeff_file else "flat_phase"))
    if family == "custom" and not args.coeff_file:
        raise ConfigError("family custom needs --coeff-file")
    if family in FAMILY_TASKS and task not in FAMILY_TASKS[family]:
        raise ConfigError(f"family {family} does not fit task {task.value}")

    n = args.n
    if preset is not None:
        if n is None:
            n = next(iter(preset.grids))
        if n not in preset.grids:
            raise ConfigError(f"preset {args.preset} has n in {sorted(preset.grids)}")
        qs = make_grid(*preset.grids[n]) if args.q_grid is None and args.q is None else None
    else:
        qs = None
    if qs is None:
        if args.q_grid is not None:
            qs = parse_grid(args.q_grid)
        elif args.q is not None:
            qs = [float(args.q)]
        else:
            raise ConfigError("need --q or --q-grid")
    for q in qs:
        _check_q(q)
    if family != "custom" and n is None:
        raise ConfigError("--n is required")
    if n is not None and n < 1:
        raise ConfigError("n must be >= 1")
    return RunConfig(task, family, n, qs, scenario, args.format, args.out, args.seed, args.coeff_file)


def _scaled_power(family):
    return 2 if family in HEISENBERG_FAMILIES else 1


def _problem(cfg: RunConfig):
    if cfg.family == "custom":
        try:
            c = fiducial_from_file(cfg.coeff_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if cfg.n is not None and cfg.n != c.n:
            raise ConfigError(f"--n {cfg.n} does not match {c.n + 1} coefficients in the file")
        cfg.n = c.n
    else:
        c = make_fiducial(cfg.family, cfg.n)
    return build_cost_matrix(cfg.task, cfg.n), c


def _threads():
    raw = os.environ.get("ABST_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring ABST_THREADS=%r", raw)
    return os.cpu_count() or 1


def solve_grid(cfg: RunConfig) -> list:
    """One record per q, in grid order."""
    m, c = _problem(cfg)
    q_star, _ = critical_abstention(c, top_eigenpair(m))
    p = _scaled_power(cfg.family)

    def point(idx_q):
        idx, q = idx_q
        res = solve_abstention(m, c, AbstentionBudget(q), seed=cfg.seed ^ idx)
        b = AbstentionBudget(q)
        return {
            "q": q,
            "qbar": b.qbar,
            "lambda": b.lam,
            "delta": res.delta,
            "fidelity": res.fidelity,
            "one_minus_f": 1.0 - res.fidelity,
            "scaled_smin": float(cfg.n) ** p * res.smin,
            "q_star": q_star,
            "kkt_residual": res.kkt_residual,
            "iterations": res.iterations,
            "converged": bool(res.converged),
            "coincidence_size": int(np.count_nonzero(res.coincidence_set)),
        }

    jobs = list(enumerate(cfg.qs))
    workers = min(_threads(), len(jobs))
    if workers <= 1:
        return [point(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, jobs))


def asymptotic_rows(cfg: RunConfig) -> list:
    rows = []
    for q in cfg.qs:
        try:
            pt = asymptotics.scenario_curve(cfg.scenario, q, cfg.n)
        except ValueError as exc:
            log.warning("q=%g: %s", q, exc)
            rows.append({"q": q, "scaled_smin": math.nan, "smin": math.nan, "fidelity": math.nan, "regime_tag": "", "parameter": math.nan})
            continue
        rows.append({
            "q": q,
            "scaled_smin": pt.scaled_smin,
            "smin": pt.smin_at(cfg.n),
            "fidelity": pt.fidelity_at(cfg.n),
            "regime_tag": pt.regime_tag,
            "parameter": pt.parameter,
        })
    return rows


def compare_rows(cfg: RunConfig) -> list:
    rows = solve_grid(cfg)
    power = asymptotics.SCENARIOS[cfg.scenario][2]
    for row in rows:
        numeric = row["scaled_smin"] * float(cfg.n) ** (power - _scaled_power(cfg.family))
        row["scaled_smin"] = numeric
        try:
            ref = asymptotics.scenario_curve(cfg.scenario, row["q"], cfg.n).scaled_smin
        except ValueError:
            ref = math.nan
        row["asymptotic_smin"] = ref
        row["rel_dev"] = (numeric - ref) / ref if math.isfinite(ref) else math.nan
    return rows


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(rows, fields, fmt, extra_json=()) -> str:
    if fmt == "json":
        keys = fields + tuple(extra_json)
        return json.dumps([{k: _jsonable(r[k]) for k in keys if k in r} for r in rows], indent=2) + "\n"
    lines = [",".join(fields)]
    lines += [",".join(_fmt(r[k]) for k in fields) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def _status(rows):
    bad = [r["q"] for r in rows if not r["converged"]]
    if bad:
        log.error("no convergence at q = %s", ", ".join("%g" % q for q in bad))
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    if len(cfg.qs) != 1:
        raise ConfigError("solve takes a single --q")
    rows = solve_grid(cfg)
    _emit(render(rows, FIELDS, cfg.fmt, ("coincidence_size",)), cfg.out)
    return _status(rows)


def cmd_sweep(cfg: RunConfig) -> int:
    rows = solve_grid(cfg)
    _emit(render(rows, FIELDS, cfg.fmt, ("coincidence_size",)), cfg.out)
    return _status(rows)


def cmd_asympt(cfg: RunConfig) -> int:
    if cfg.scenario is None:
        raise ConfigError("asympt needs --scenario or --preset")
    _emit(render(asymptotic_rows(cfg), ASYMPT_FIELDS, cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    if cfg.scenario is None:
        raise ConfigError("compare needs --scenario or --preset")
    rows = compare_rows(cfg)
    _emit(render(rows, COMPARE_FIELDS, cfg.fmt, ("coincidence_size",)), cfg.out)
    return _status(rows)


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "asympt": cmd_asympt, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abstention", description="Optimal covariant estimation with abstention.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--task", choices=[t.value for t in TaskKind])
        sp.add_argument("--family", help=f"one of {', '.join(FAMILIES)} (aliases: {', '.join(FAMILY_ALIASES)})")
        sp.add_argument("--coeff-file", help="text file with one coefficient per line")
        sp.add_argument("--n", type=int)
        sp.add_argument("--q", type=float)
        sp.add_argument("--q-grid", help="start:stop:step, stop inclusive")
        sp.add_argument("--scenario", help=f"asymptotic law: {', '.join(asymptotics.SCENARIOS)}")
        sp.add_argument("--preset", help=f"figure preset: {', '.join(PRESETS)}")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on bad usage
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

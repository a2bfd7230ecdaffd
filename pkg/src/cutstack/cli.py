"""Config-driven experiment CLI.

Subcommands: validate | scan | bounds | refine, each taking a single JSON
config. Outputs are CSV tables plus a summary JSON per run; every CSV starts
with a comment line echoing the config hash so rows are reproducible from the
config alone. Exit codes: 0 pass, 1 domain failure, 2 config/I-O error,
3 budget exhaustion. No environment variables are consulted except
CUTSTACK_OUT as a low-priority output-directory default.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .construction import (
    BudgetError,
    ConstructionSchedule,
    DEFAULT_CELL_BUDGET,
    ScheduleError,
    build_model,
    eccentric_exponential,
    eccentric_schedule,
    odometer_schedule,
    schedule_from_json,
    spacered_schedule,
    validate_schedule,
    write_model_stats_csv,
)
from .entropy import (
    FLOAT_SLACK,
    directional_scan,
    m_stability_report,
    write_scan_csv,
    y_mass_bound_check,
)
from .lattice import DirectionSubspace
from .towers import RefinementError, TowerError, model_tower, perturb_tower, refine_sequence

EXIT_PASS = 0
EXIT_DOMAIN = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

BUILDERS = {
    "odometer": odometer_schedule,
    "spacered": spacered_schedule,
    "eccentric": eccentric_schedule,
    "eccentric_exponential": eccentric_exponential,
}


class ConfigError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutstack",
        description="Rank-one Z^d cutting-and-stacking experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("validate", "validate a schedule and report Folner/eccentricity trends"),
        ("scan", "run directional entropy scans"),
        ("bounds", "verify the per-row inequality caps over the scan grid"),
        ("refine", "run the tower refinement demo"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--threads", type=int, default=1, help="parallel scan workers")
    return parser


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def resolve_out_dir(args, cfg) -> Path:
    out = args.out or cfg.get("out_dir") or os.environ.get("CUTSTACK_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def resolve_schedule(cfg: dict, base_dir: Path) -> ConstructionSchedule:
    if "schedule_file" in cfg:
        path = Path(cfg["schedule_file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"schedule file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return schedule_from_json(json.load(f))
    sched = cfg.get("schedule")
    if sched is None:
        raise ConfigError("config needs 'schedule' or 'schedule_file'")
    if "builder" in sched:
        kwargs = dict(sched)
        name = kwargs.pop("builder")
        if name not in BUILDERS:
            raise ConfigError(f"unknown builder {name!r}")
        try:
            return BUILDERS[name](**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad builder arguments: {exc}") from exc
    return schedule_from_json(sched)


def parse_direction(entry):
    """A direction entry is 'cube' (the n=d window) or a list of vectors."""
    if entry == "cube":
        return None, "cube"
    if not isinstance(entry, list) or not entry:
        raise ConfigError(f"bad direction entry: {entry!r}")
    direction = DirectionSubspace(entry)
    label = "x".join(
        "_".join(str(c).replace("-", "m") for c in v) for v in direction.vectors
    )
    return direction, label


def parse_j_range(cfg: dict, K: int) -> list[int]:
    if "j_list" in cfg:
        js = [int(j) for j in cfg["j_list"]]
    elif "j_range" in cfg:
        lo, hi = cfg["j_range"]
        js = list(range(int(lo), int(hi) + 1))
    else:
        js = list(range(2, K + 1))
    if any(not 1 <= j <= K for j in js):
        raise ConfigError(f"j values must lie in 1..{K}")
    return js


def _write_summary(out_dir: Path, command, cfg_hash, verdicts, elapsed_ms) -> None:
    summary = {
        "command": command,
        "config_hash": cfg_hash,
        "verdicts": verdicts,
        "elapsed_ms": elapsed_ms,
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)


def cmd_validate(cfg, out_dir, cfg_hash, base_dir, threads=1):
    schedule = resolve_schedule(cfg, base_dir)
    report = validate_schedule(schedule, cfg.get("eccentricity_threshold", 1.0))
    data = report.to_json()
    data["config_hash"] = cfg_hash
    data["schedule_id"] = schedule.schedule_id
    with open(out_dir / "validate_report.json", "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
    with open(out_dir / "eccentricity.csv", "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={cfg_hash} command=validate\n")
        report.eccentricity.to_csv(f)
    with open(out_dir / "folner.csv", "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={cfg_hash} command=validate\n")
        f.write("axis,j,ratio,ratio_float\n")
        for axis, ratios in sorted(report.folner.items()):
            for j, r in enumerate(ratios, start=1):
                f.write(f"{axis},{j},{r},{float(r)!r}\n")
    verdicts = [
        {
            "name": "schedule_valid",
            "passed": report.valid,
            "detail": [f"stage {v.stage}: {v.message}" for v in report.violations],
        }
    ]
    if not report.valid:
        first = report.violations[0]
        print(
            f"schedule invalid at stage {first.stage}: {first.message}",
            file=sys.stderr,
        )
    return verdicts, EXIT_PASS if report.valid else EXIT_DOMAIN


def _scan_inputs(cfg, base_dir):
    schedule = resolve_schedule(cfg, base_dir)
    if "K" not in cfg or "k" not in cfg:
        raise ConfigError("scan configs need 'K' and 'k'")
    K, k = int(cfg["K"]), int(cfg["k"])
    budget = int(cfg.get("cell_budget", DEFAULT_CELL_BUDGET))
    model = build_model(schedule, K, cell_budget=budget)
    directions = [parse_direction(e) for e in cfg.get("directions", ["cube"])]
    m_list = [Fraction(str(m)) if isinstance(m, str) else Fraction(m) for m in cfg.get("m_list", [1])]
    js = parse_j_range(cfg, K)
    variant = cfg.get("variant", "theorem_main")
    mode = cfg.get("mode", "strict")
    log_base = cfg.get("log_base")
    decay = float(cfg.get("decay_factor", 0.25))
    return model, k, directions, m_list, js, variant, mode, log_base, decay


def cmd_scan(cfg, out_dir, cfg_hash, base_dir, threads=1):
    model, k, directions, m_list, js, variant, mode, log_base, decay = _scan_inputs(
        cfg, base_dir
    )
    with open(out_dir / "model_stats.csv", "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={cfg_hash} command=scan\n")
        write_model_stats_csv(model, f)

    def run(item):
        direction, label = item
        return label, directional_scan(
            model,
            k,
            direction,
            m_list,
            js,
            variant,
            mode=mode,
            decay_factor=decay,
            log_base=log_base,
            direction_label=label,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, directions))
    else:
        results = [run(item) for item in directions]
    policy = cfg.get("verdict_policy", "require_decay")
    if policy not in ("require_decay", "expect_no_decay"):
        raise ConfigError(f"unknown verdict_policy {policy!r}")
    verdicts = []
    any_empty = False
    all_pass = True
    for label, res in results:
        path = out_dir / f"scan_{label}.csv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            write_scan_csv(
                res.rows,
                f,
                comment=f"config_hash={cfg_hash} command=scan direction={label}",
            )
        feasible = len(res.feasible_rows)
        if feasible == 0:
            any_empty = True
        passed = res.verdict if policy == "require_decay" else not res.verdict
        all_pass = all_pass and passed
        verdicts.append(
            {
                "name": f"decay[{label}]",
                "passed": passed,
                "detail": {
                    "policy": policy,
                    "feasible_rows": feasible,
                    "verdicts": {
                        str(m): {
                            "ratio": v.ratio,
                            "factor": v.factor,
                            "decayed": v.passed,
                        }
                        for m, v in sorted(res.decay_verdicts.items())
                    },
                },
            }
        )
        if len(m_list) >= 2 and feasible:
            stab = m_stability_report(res)
            verdicts.append(
                {
                    "name": f"m_stability[{label}]",
                    "passed": True,
                    "detail": {
                        "lower_spread": stab.lower_spread,
                        "upper_spread": stab.upper_spread,
                        "rows": [
                            {
                                "m": r.m,
                                "top_j": r.top_j,
                                "norm_lower": r.norm_lower,
                                "norm_upper": r.norm_upper,
                                "all_bad": r.all_bad,
                            }
                            for r in stab.rows
                        ],
                    },
                }
            )
    if any_empty:
        print("a direction produced zero feasible rows", file=sys.stderr)
        return verdicts, EXIT_BUDGET
    return verdicts, EXIT_PASS if all_pass else EXIT_DOMAIN


def cmd_bounds(cfg, out_dir, cfg_hash, base_dir, threads=1):
    model, k, directions, m_list, js, variant, mode, log_base, decay = _scan_inputs(
        cfg, base_dir
    )
    corrupt = float(cfg.get("_corrupt_good_part_factor", 1.0))
    rows_report = []
    all_hold = True
    for direction, label in directions:
        res = directional_scan(
            model,
            k,
            direction,
            m_list,
            js,
            variant,
            mode="strict",
            decay_factor=decay,
            log_base=log_base,
            direction_label=label,
        )
        for row in res.feasible_rows:
            good_part = row.good_part * corrupt
            checks = {
                "good_le_cap": good_part <= row.good_rhs + FLOAT_SLACK,
                "lump_le_cap": row.lump_term <= row.bad_rhs + FLOAT_SLACK,
                "shields_le_cap": row.shields_term + row.lump_term
                <= row.bad_rhs + FLOAT_SLACK,
            }
            y_rep = y_mass_bound_check(
                model, row.j, direction, Fraction(row.t), Fraction(row.m)
            )
            checks["y_mass_le_bound"] = y_rep.holds
            if len(model.rect(k)) >= 2:
                from .entropy import lemma_bad_rhs

                strict = lemma_bad_rhs(model, k, row.window_size, row.y_mass, "strict")
                loose = lemma_bad_rhs(model, k, row.window_size, row.y_mass, "paper")
                checks["strict_le_paper"] = strict <= loose + FLOAT_SLACK
            ok = all(checks.values())
            all_hold = all_hold and ok
            rows_report.append(
                {
                    "direction": label,
                    "j": row.j,
                    "m": row.m,
                    "y_mass": str(row.y_mass),
                    "y_bound": y_rep.bound,
                    "checks": checks,
                    "ok": ok,
                }
            )
    with open(out_dir / "bounds_report.json", "w", encoding="utf-8") as f:
        json.dump(
            {"config_hash": cfg_hash, "all_hold": all_hold, "rows": rows_report},
            f,
            indent=2,
        )
    verdicts = [{"name": "bounds_hold", "passed": all_hold, "detail": len(rows_report)}]
    return verdicts, EXIT_PASS if all_hold else EXIT_DOMAIN


def cmd_refine(cfg, out_dir, cfg_hash, base_dir, threads=1):
    schedule = resolve_schedule(cfg, base_dir)
    if "K" not in cfg:
        raise ConfigError("refine configs need 'K'")
    K = int(cfg["K"])
    budget = int(cfg.get("cell_budget", DEFAULT_CELL_BUDGET))
    model = build_model(schedule, K, cell_budget=budget)
    rcfg = cfg.get("refine", {})
    num_towers = int(rcfg.get("num_towers", K - 1))
    depth = int(rcfg.get("depth", 3))
    if "deltas" in rcfg:
        deltas = [Fraction(str(d)) for d in rcfg["deltas"]]
    else:
        base = Fraction(str(rcfg.get("delta_base", "1/2")))
        deltas = [base**i for i in range(1, num_towers + 1)]
    rng = random.Random(int(cfg.get("seed", 0)))
    removals = {int(kk): int(v) for kk, v in rcfg.get("perturb_removals", {}).items()}
    towers = []
    for j in range(1, num_towers + 1):
        tower = model_tower(model, j)
        n_remove = removals.get(j, 0)
        if n_remove > 0:
            frac = n_remove / len(tower.base)
            tower = perturb_tower(tower, frac, rng)
        towers.append(tower)
    try:
        trace = refine_sequence(towers, deltas, depth)
    except RefinementError as exc:
        print(f"refinement failed at (k, ell) = {exc.location}: {exc}", file=sys.stderr)
        return (
            [{"name": "refinement", "passed": False, "detail": str(exc)}],
            EXIT_DOMAIN,
        )
    with open(out_dir / "refine_trace.csv", "w", encoding="utf-8", newline="") as f:
        trace.to_csv(f, comment=f"config_hash={cfg_hash} command=refine")
    verdicts = [
        {
            "name": "refinement",
            "passed": True,
            "detail": {
                "grid_cells": len(trace.towers),
                "cauchy_checks": len(trace.cauchy_rows),
                "max_one_step": str(max(trace.one_step.values(), default=Fraction(0))),
            },
        }
    ]
    return verdicts, EXIT_PASS


COMMANDS = {
    "validate": cmd_validate,
    "scan": cmd_scan,
    "bounds": cmd_bounds,
    "refine": cmd_refine,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg_hash = config_hash(cfg)
    out_dir = resolve_out_dir(args, cfg)
    base_dir = Path(args.config).resolve().parent
    start = time.monotonic()
    try:
        verdicts, code = COMMANDS[args.command](
            cfg, out_dir, cfg_hash, base_dir, threads=max(1, args.threads)
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ScheduleError, TowerError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    elapsed_ms = int((time.monotonic() - start) * 1000)
    _write_summary(out_dir, args.command, cfg_hash, verdicts, elapsed_ms)
    return code


if __name__ == "__main__":
    sys.exit(main())

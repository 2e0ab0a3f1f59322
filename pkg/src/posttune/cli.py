"""``posttune`` command line.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .drb import curves_to_csv, run_rb
from .drift import drift_report
from .gateset import GateSet
from .gst import InformationallyIncompleteError
from .params import MODE_SIZES, CorrectionParams
from .pipeline import (
    gst_stage,
    post_stage,
    run_campaign,
    write_gst_outputs,
    write_post_outputs,
)
from .scenario import Scenario, ScenarioError
from .seed import SeedResult, find_seed

log = logging.getLogger("posttune")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _scenario(args) -> Scenario:
    if args.scenario is None:
        sc = Scenario.from_dict({})
    else:
        sc = Scenario.load(args.scenario)
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "exact", False):
        over["post.objective.exact_mode"] = True
        over["gst.exact"] = True
    if getattr(args, "mode", None) is not None:
        over["post.mode"] = args.mode
    return sc.with_overrides(**over) if over else sc


def _out(args, sc: Scenario | None = None) -> Path:
    if args.out is not None:
        return Path(args.out)
    return sc.output if sc is not None else Path("runs")


def _read_json(path: str, what: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed {what} {p}: {exc}") from exc


def _load_seed(path: str, mode: str | None) -> SeedResult:
    data = _read_json(path, "seed file")
    try:
        seed = SeedResult.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed seed file {path}: {exc}") from exc
    if mode is not None and seed.params.mode != mode:
        raise InputError(
            f"seed file holds {seed.params.size} angles ({seed.params.mode}) but mode {mode!r} "
            f"needs {MODE_SIZES[mode]}; rerun 'seed --mode {mode}'"
        )
    return seed


# ---------------------------------------------------------------------------


def cmd_gst(args) -> int:
    sc = _scenario(args)
    if args.cycle is not None:
        sc = sc.with_overrides(**{"gst.cycle": args.cycle})
    dataset, result = gst_stage(sc)
    out = _out(args, sc)
    diag = write_gst_outputs(out, dataset, result)
    print(f"gst: {len(dataset.counts)} circuits, raw residual max {diag['raw']['max_abs']:.3g}, "
          f"projected residual max {diag['projected']['max_abs']:.3g} -> {out}")
    return EXIT_OK


def cmd_seed(args) -> int:
    if args.estimate is None:
        raise InputError("seed needs --estimate <gateset json>")
    data = _read_json(args.estimate, "estimate")
    try:
        gs = GateSet.from_dict(data)
        G = gs.gates["Gcx"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed estimate {args.estimate}: {exc}") from exc
    mode = args.mode or "control-only"
    res = find_seed(G, mode, restarts=args.restarts, rng_seed=args.seed or 0)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "seed.json").write_text(res.to_json())
    print(res.params.table_row("seed"))
    print(f"residual {res.residual_distance:.3g} (baseline {res.baseline_distance:.3g}) -> {out / 'seed.json'}")
    return EXIT_OK


def cmd_post(args) -> int:
    sc = _scenario(args)
    if args.seed_file is None:
        raise InputError("post needs --seed-file <seed json>")
    seed = _load_seed(args.seed_file, sc.mode if args.mode else None)
    if seed.params.mode != sc.mode:
        sc = sc.with_overrides(**{"post.mode": seed.params.mode})
    cycle = args.cycle if args.cycle is not None else sc.cycles[0]
    rep = post_stage(sc, seed, cycle)
    out = _out(args, sc)
    write_post_outputs(out, rep)
    print(rep.markdown())
    return EXIT_OK


def cmd_campaign(args) -> int:
    sc = _scenario(args)
    if len(sc.cycles) < 2:
        raise ScenarioError("a campaign needs at least two cycles in post.cycles")
    out = _out(args, sc)
    camp = run_campaign(sc, out)
    print(camp.markdown())
    return EXIT_OK


def cmd_drift_report(args) -> int:
    if args.campaign is None:
        raise InputError("drift-report needs --campaign <campaign.json>")
    data = _read_json(args.campaign, "campaign report")
    try:
        seed = CorrectionParams.from_dict(data["seed"]["params"])
        hist = [(str(c["cycle"]), CorrectionParams.from_dict(c["final_params"])) for c in data["cycles"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed campaign report: {exc}") from exc
    rep = drift_report(hist, seed, num_samples=args.samples)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "drift.csv").write_text(rep.to_csv())
    (out / "drift.json").write_text(rep.to_json())
    print(json.dumps(rep.summary, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    sc = _scenario(args)
    params = None
    if args.seed_file is not None:
        params = _load_seed(args.seed_file, None).params
    cycle = args.cycle if args.cycle is not None else 0
    model, spec = sc.model(), sc.objective_spec()
    curves = [run_rb(model, cycle, None, spec, sc.m_grid, seed=sc.seed, label="native")]
    if params is not None:
        curves.append(run_rb(model, cycle, params, spec, sc.m_grid, seed=sc.seed, label="corrected"))
    out = _out(args, sc)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.csv").write_text(curves_to_csv(curves))
    for c in curves:
        print(f"{c.label}: p={c.fit.p:.5f} r={c.fit.r:.5f}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario YAML file (defaults built in)")
    common.add_argument("--cycle", type=int, help="calibration cycle")
    common.add_argument("--mode", choices=sorted(MODE_SIZES), help="correction layout")
    common.add_argument("--exact", action="store_true", help="exact probabilities, no sampling")
    common.add_argument("--seed", type=int, help="override the global seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="posttune", description="GST-seeded CNOT tune-up on a simulated device")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gst", parents=[common], help="collect GST data and estimate the gate set").set_defaults(func=cmd_gst)
    s = sub.add_parser("seed", parents=[common], help="seed angles from a gate set estimate")
    s.add_argument("--estimate", help="gate set JSON written by 'gst'")
    s.add_argument("--restarts", type=int, default=8)
    s.set_defaults(func=cmd_seed)
    s = sub.add_parser("post", parents=[common], help="tune the CNOT at one cycle")
    s.add_argument("--seed-file", help="seed JSON written by 'seed'")
    s.set_defaults(func=cmd_post)
    sub.add_parser("campaign", parents=[common], help="one GST, then tune-ups at every cycle").set_defaults(
        func=cmd_campaign
    )
    s = sub.add_parser("drift-report", parents=[common], help="diamond-distance drift report")
    s.add_argument("--campaign", help="campaign.json written by 'campaign'")
    s.add_argument("--samples", type=int, default=200)
    s.set_defaults(func=cmd_drift_report)
    s = sub.add_parser("bench", parents=[common], help="RB decay curves, native vs corrected")
    s.add_argument("--seed-file", help="corrections to benchmark (native only if omitted)")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, InputError) as exc:
        print(f"posttune: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InformationallyIncompleteError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"posttune: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

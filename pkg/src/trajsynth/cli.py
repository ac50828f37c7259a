"""Command-line entry points: gen, synth, eval, bench, serve.

Exit codes: 0 ok, 2 usage, 3 data/oracle problems, 4 environment problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .active import (
    FixedLabelsOracle, GroundTruthOracle, LoopConfig, SeedingError, evaluate_f1, run_loop,
)
from .bench import run_bench
from .enumeration import EnumConfig, result_to_json_obj
from .parser import QuerySyntaxError, format_query, parse_query
from .predicates import Registry, build_registry, load_regions, regions_to_json_obj
from .query import Sketch
from .semantics import Convention, check_sat
from .synthetic import (
    SCENARIOS, SyntheticSpec, enum_config_for_scenario, generate_synthetic,
    reference_query, registry_for_scenario, scenario_convention, scenario_regions,
)
from .trajectory import Dataset, ParseError, SchemaError, load_dataset, save_dataset, split_dataset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ENV = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


def _write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load(path: str, fmt: str | None) -> Dataset:
    try:
        return load_dataset(path, fmt)
    except FileNotFoundError as e:
        raise CliError(f"dataset not found: {e}", EXIT_DATA)
    except (ParseError, SchemaError, ValueError) as e:
        raise CliError(f"bad dataset: {e}", EXIT_DATA)


def _setup(args, ds: Dataset) -> tuple[Registry, Convention, EnumConfig]:
    if args.scenario:
        registry = registry_for_scenario(args.scenario, ds)
        convention = scenario_convention(args.scenario)
        cfg = enum_config_for_scenario(args.scenario, registry)
    else:
        regions = load_regions(args.regions) if getattr(args, "regions", None) else ()
        registry = build_registry(ds, regions=regions)
        convention = Convention(args.convention)
        cfg = EnumConfig(registry=registry)
    if getattr(args, "max_predicates", None):
        cfg.max_predicates = args.max_predicates
    if getattr(args, "max_parameterized", None) is not None:
        cfg.max_parameterized = args.max_parameterized
    if getattr(args, "operators", None):
        cfg.operators = tuple(args.operators.split(","))
    if getattr(args, "predicates", None):
        cfg.predicate_names = tuple(args.predicates.split(","))
    return registry, convention, cfg


def _resolve_oracle(args, ds: Dataset, registry: Registry, convention: Convention):
    spec = args.oracle
    if spec == "dataset-labels":
        if not ds.labels:
            raise CliError("dataset carries no labels for the dataset-labels oracle", EXIT_DATA)
        return FixedLabelsOracle(ds.labels)
    if spec.startswith("query:"):
        try:
            q = parse_query(spec[len("query:"):])
        except QuerySyntaxError as e:
            raise CliError(f"bad oracle query: {e}", EXIT_DATA)
        return GroundTruthOracle(q, registry, convention)
    if spec.startswith("labels:"):
        path = Path(spec[len("labels:"):])
        try:
            labels = {str(k): int(v) for k, v in json.loads(path.read_text()).items()}
        except (OSError, ValueError) as e:
            raise CliError(f"bad labels file: {e}", EXIT_DATA)
        return FixedLabelsOracle(labels)
    raise CliError(f"unknown oracle {spec!r} (use query:<text>, labels:<file>, dataset-labels)",
                   EXIT_DATA)


def cmd_gen(args) -> int:
    spec = SyntheticSpec(
        scenario=args.scenario,
        positives=args.pos,
        negatives=args.neg,
        noise=args.noise,
        length_range=(args.min_len, args.max_len) if args.min_len else (0, 0),
        seed=args.seed,
    )
    ds = generate_synthetic(spec)
    save_dataset(ds, args.output, args.format)
    if args.regions_out:
        _write_json(args.regions_out, regions_to_json_obj(scenario_regions(args.scenario)))
    print(f"wrote {len(ds.trajectories)} trajectories to {args.output}")
    return EXIT_OK


def cmd_synth(args) -> int:
    ds = _load(args.dataset, args.format)
    registry, convention, cfg = _setup(args, ds)
    train, test = split_dataset(ds, args.split)
    oracle = _resolve_oracle(args, ds, registry, convention)
    loop_cfg = LoopConfig(
        initial_positives=args.pos, initial_negatives=args.neg,
        steps=args.steps, seed=args.seed, selector=args.selector,
    )
    try:
        result = run_loop(train, test, oracle, cfg, loop_cfg, convention,
                          per_sketch_budget=args.budget)
    except SeedingError as e:
        raise CliError(str(e), EXIT_DATA)
    _write_json(args.output, result_to_json_obj(result.synthesis))
    _write_json(args.transcript, result.transcript)
    final = result.transcript[-1]
    print(f"rounds: {len(result.transcript)}  consistent: {final['num_consistent']}  "
          f"median F1: {final['median_f1']}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = _load(args.dataset, args.format)
    if not ds.labels:
        raise CliError("eval requires a labeled dataset", EXIT_DATA)
    registry, convention, _ = _setup(args, ds)
    try:
        q = parse_query(args.query)
    except QuerySyntaxError as e:
        raise CliError(f"bad query: {e}", EXIT_DATA)
    pairs = ds.labeled_pairs()
    matched = [z.id for z, _ in pairs if check_sat(q, z, registry, convention) == 1]
    median, scores = evaluate_f1([q], pairs, registry, convention)
    truth_pos = {z.id for z, y in pairs if y == 1}
    tp = len([m for m in matched if m in truth_pos])
    precision = tp / len(matched) if matched else 0.0
    recall = tp / len(truth_pos) if truth_pos else 0.0
    print(json.dumps({
        "query": format_query(q),
        "precision": precision,
        "recall": recall,
        "f1": scores[0],
        "matched": matched,
    }, sort_keys=True, indent=2))
    return EXIT_OK


def default_bench_sketches(scenario: str) -> list[str]:
    return {
        "lane-turn": [
            "InRegion_1(A) ; Any ; InRegion_2(A)",
            "InRegion_1(A) ; MinLength[?] ; InRegion_2(A)",
            "MinLength[?] ; InRegion_2(A) ; MinLength[?]",
            "InRegion_1(A) & MinLength[?]",
        ],
        "lane-follow": [
            "InRegion_1(A)",
            "InRegion_1(A) & MinLength[?]",
            "MinLength[?] ; InRegion_1(A) ; MinLength[?]",
        ],
        "speed-contrast": [
            "VelGt[?](A) ; VelGt[?](A)",
            "VelGt[?](A) ; Any ; VelGt[?](A)",
            "VelGt[?](A) & MinLength[?]",
            "VelGt[?](A)",
        ],
        "maritime-loiter": [
            "XPosGt[?](A) & DispLt[?](A) & DurationNotShort",
            "XPosGt[?](A) & DurationNotShort",
            "XPosGt[?](A) ; DispLt[?](A)",
            "DispLt[?](A)",
        ],
    }[scenario]


def cmd_bench(args) -> int:
    ds = _load(args.dataset, args.format)
    if not ds.labels:
        raise CliError("bench requires a labeled dataset", EXIT_DATA)
    registry, convention, _ = _setup(args, ds)
    if args.sketches:
        texts = [t for t in Path(args.sketches).read_text().splitlines() if t.strip()]
    elif args.scenario:
        texts = default_bench_sketches(args.scenario)
    else:
        raise CliError("provide --sketches or --scenario", EXIT_DATA)
    try:
        sketches = [Sketch(parse_query(t)) for t in texts]
    except QuerySyntaxError as e:
        raise CliError(f"bad sketch: {e}", EXIT_DATA)
    report = run_bench(args.task_id or args.dataset, ds.labeled_pairs(), sketches,
                       registry, eps=args.eps, budget=args.budget, convention=convention)
    if args.output:
        _write_json(args.output, report.to_json_obj())
    print(json.dumps({
        "speedup": report.speedup,
        "classifications_match": report.classifications_match,
        "quant_time": report.total_time("quant"),
        "bsearch_time": report.total_time("bsearch"),
    }, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import errno

    import uvicorn

    from .service import Session, create_app

    ds = _load(args.dataset, args.format)
    registry, convention, cfg = _setup(args, ds)
    loop_cfg = LoopConfig(initial_positives=args.pos, initial_negatives=args.neg,
                          steps=args.steps, seed=args.seed)
    session = Session(ds, cfg, loop_cfg, convention, split=args.split,
                      checkpoint_path=args.checkpoint,
                      regions=list(scenario_regions(args.scenario)) if args.scenario else [])
    app = create_app(session)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit:
        raise
    except OSError as e:
        if e.errno in (errno.EADDRINUSE, errno.EACCES):
            print(f"port {args.port} unavailable: {e}", file=sys.stderr)
            return EXIT_ENV
        raise
    finally:
        session.close()
    return EXIT_OK


def _add_setup_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=SCENARIOS, default=None,
                   help="use a builtin scenario's regions, convention, and predicate set")
    p.add_argument("--regions", default=None, help="region config JSON file")
    p.add_argument("--convention", choices=["sat", "sat_sub"], default="sat_sub",
                   help="labeling convention when no scenario is given")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--max-predicates", type=int, dest="max_predicates", default=None)
    p.add_argument("--max-parameterized", type=int, dest="max_parameterized", default=None)
    p.add_argument("--operators", default=None, help="comma list from seq,and,or,iterate")
    p.add_argument("--predicates", default=None, help="comma list of predicate names to enumerate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajsynth",
                                     description="Trajectory query synthesis from examples")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--scenario", choices=SCENARIOS, required=True)
    g.add_argument("--pos", type=int, default=2)
    g.add_argument("--neg", type=int, default=10)
    g.add_argument("--noise", type=float, default=0.02)
    g.add_argument("--min-len", type=int, dest="min_len", default=0)
    g.add_argument("--max-len", type=int, dest="max_len", default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=["json", "csv"], default=None)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--regions-out", dest="regions_out", default=None)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("synth", help="synthesize queries with active learning")
    s.add_argument("dataset")
    s.add_argument("--oracle", default="dataset-labels")
    s.add_argument("--pos", type=int, default=2)
    s.add_argument("--neg", type=int, default=10)
    s.add_argument("--steps", type=int, default=25)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=25)
    s.add_argument("--split", type=float, default=0.5)
    s.add_argument("--selector", choices=["disagreement", "random"], default="disagreement")
    s.add_argument("-o", "--output", default="synthesis.json")
    s.add_argument("--transcript", default="transcript.json")
    _add_setup_flags(s)
    s.set_defaults(fn=cmd_synth)

    e = sub.add_parser("eval", help="evaluate a query against dataset labels")
    e.add_argument("query")
    e.add_argument("dataset")
    _add_setup_flags(e)
    e.set_defaults(fn=cmd_eval)

    b = sub.add_parser("bench", help="compare quantitative vs binary-search pruning")
    b.add_argument("dataset")
    b.add_argument("--sketches", default=None, help="file with one sketch per line")
    b.add_argument("--eps", type=float, default=1e-3)
    b.add_argument("--budget", type=int, default=25)
    b.add_argument("--task-id", dest="task_id", default=None)
    b.add_argument("-o", "--output", default=None)
    _add_setup_flags(b)
    b.set_defaults(fn=cmd_bench)

    v = sub.add_parser("serve", help="serve the interactive labeling session")
    v.add_argument("dataset")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.add_argument("--pos", type=int, default=2)
    v.add_argument("--neg", type=int, default=10)
    v.add_argument("--steps", type=int, default=25)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--split", type=float, default=0.5)
    v.add_argument("--checkpoint", default=None)
    _add_setup_flags(v)
    v.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())

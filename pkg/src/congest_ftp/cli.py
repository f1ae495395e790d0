"""``congest-ftp`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 simulator timeout.
"""
from __future__ import annotations

import argparse
import json
import sys

from .congest_sim import SimTimeout
from .graph_core import Graph, format_edge_list, parse_edge_list, read_edge_list
from .harness import (
    GENERATORS,
    AlgorithmOptions,
    ExperimentSpec,
    GraphSpec,
    VerificationFailed,
    canonical_json,
    choose_sources,
    generate,
    records_csv,
    records_json,
    run_algorithm,
    run_experiment,
    verify_outcome,
)
from .oracle import verify_additive, verify_preserver

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_TIMEOUT = 0, 1, 2, 3
BUILD_COMMANDS = {
    "ftmbfs": "ftmbfs",
    "dual-ftmbfs": "dual-ftmbfs",
    "spanner1": "spanner1",
    "spanner2": "spanner2",
    "centralized": "centralized",
}


class UsageError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def read_config(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` comments; keys may use dashes or underscores."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.rstrip()}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phase-constant", type=int, default=4)
    p.add_argument("--max-rounds", type=int, default=5_000_000)
    p.add_argument("--sample-constant", type=float, default=10.0)
    p.add_argument("--sample-prob", type=float, default=None, help="override every sampling probability")
    p.add_argument("--json", dest="json_out", help="write canonical JSON here ('-' for stdout)")
    p.add_argument("--allow-large", action="store_true", help="lift the size cap of dual-fault verification")


def _add_build(p: argparse.ArgumentParser) -> None:
    _add_common(p)
    p.add_argument("--graph", required=True, help="edge-list file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sources", help="comma-separated vertex labels")
    g.add_argument("--num-sources", type=int, help="pick this many sources at random")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out", help="write the output subgraph as an edge list")
    p.add_argument("--provenance", help="write the edge -> rule JSON sidecar")
    p.add_argument("--sigma1-override", type=int)
    p.add_argument("--sigma2-override", type=int)
    p.add_argument("--threshold-override", type=float)
    p.add_argument("--source-prob", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="congest-ftp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ftmbfs", "dual-ftmbfs", "spanner1", "spanner2"):
        _add_build(sub.add_parser(name))
    c = sub.add_parser("centralized", help="sequential reference constructions")
    _add_build(c)
    c.add_argument("--dual", action="store_true")

    v = sub.add_parser("verify", help="check a subgraph against the exhaustive oracle")
    _add_common(v)
    v.add_argument("--graph", required=True)
    v.add_argument("--subgraph", required=True)
    v.add_argument("--f", type=int, choices=(1, 2), default=1)
    v.add_argument("--sources", help="comma-separated labels (preserver check)")
    v.add_argument("--beta", type=int, help="additive stretch check over all pairs instead")
    v.add_argument("--limit", type=int, default=20)

    e = sub.add_parser("experiment", help="sweep sizes, source counts, seeds and algorithms")
    _add_common(e)
    e.add_argument("--spec", help="JSON experiment spec; other sweep flags are ignored")
    e.add_argument("--generator", choices=GENERATORS, default="erdos_renyi")
    e.add_argument("--sizes", type=_ints, default=[])
    e.add_argument("--num-sources", type=_ints, default=[1])
    e.add_argument("--seeds", type=_ints, default=[0])
    e.add_argument("--algorithms", type=_strs, default=["ftmbfs"])
    e.add_argument("--p", type=float)
    e.add_argument("--avg-degree", type=float)
    e.add_argument("--r", type=float)
    e.add_argument("--cycle-length", type=int)
    e.add_argument("--connect", choices=("resample", "largest"), default="resample")
    e.add_argument("--verify", action="store_true")
    e.add_argument("--fail-fast", action="store_true")
    e.add_argument("--csv", dest="csv_out")
    e.add_argument("--wall-time", action="store_true", help="include wall_time in JSON")
    e.add_argument("--sigma1-override", type=int)
    e.add_argument("--sigma2-override", type=int)
    e.add_argument("--threshold-override", type=float)
    e.add_argument("--source-prob", type=float)

    gp = sub.add_parser("generate", help="write a generated graph as an edge list")
    gp.add_argument("--config")
    gp.add_argument("--generator", choices=GENERATORS, required=True)
    gp.add_argument("--n", type=int, default=0)
    gp.add_argument("--p", type=float)
    gp.add_argument("--avg-degree", type=float)
    gp.add_argument("--r", type=float)
    gp.add_argument("--rows", type=int)
    gp.add_argument("--cols", type=int)
    gp.add_argument("--cycle-length", type=int)
    gp.add_argument("--connect", choices=("resample", "largest"), default="resample")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", default="-")
    return parser


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        defaults = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest: a for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(defaults) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        typed = {}
        for k, raw in defaults.items():
            act = known[k]
            if act.nargs == 0:
                typed[k] = raw.lower() in ("1", "true", "yes", "on")
            else:
                typed[k] = act.type(raw) if act.type else raw
        sub.set_defaults(**typed)
        args = parser.parse_args(argv)
    return args


def _emit(text: str, dest: str | None) -> None:
    if dest is None:
        return
    if dest == "-":
        sys.stdout.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def _options(args) -> AlgorithmOptions:
    return AlgorithmOptions(
        phase_constant=args.phase_constant,
        max_rounds=args.max_rounds,
        sample_constant=args.sample_constant,
        sample_prob=args.sample_prob,
        sigma1=getattr(args, "sigma1_override", None),
        sigma2=getattr(args, "sigma2_override", None),
        threshold=getattr(args, "threshold_override", None),
        source_prob=getattr(args, "source_prob", None),
        allow_large=args.allow_large,
    )


def _resolve_sources(g: Graph, args) -> list[int]:
    if args.sources:
        index = {lab: i for i, lab in enumerate(g.labels)}
        try:
            return sorted({index[x] for x in _strs(args.sources)})
        except KeyError as exc:
            raise UsageError(f"unknown source label {exc.args[0]}") from None
    if args.num_sources:
        return choose_sources(g, args.num_sources, args.seed)
    return [0]


def cmd_build(args) -> int:
    g = read_edge_list(args.graph)
    algo = BUILD_COMMANDS[args.command]
    if args.command == "centralized" and args.dual:
        algo = "centralized-dual"
    srcs = _resolve_sources(g, args) if algo not in ("spanner1", "spanner2") else []
    out = run_algorithm(algo, g, srcs, args.seed, _options(args))
    lab = g.labels
    doc = {
        "command": args.command,
        "algorithm": algo,
        "seed": args.seed,
        "graph": {"n": g.n, "m": g.m, "D": g.diameter},
        "sources": [lab[s] for s in out.sources],
        "params": out.details,
        "edges_out": len(out.subgraph),
        "edges": [[lab[u], lab[v]] for u, v in sorted(out.subgraph.edges)],
        "provenance": out.subgraph.provenance_json(),
        "trace": out.trace.summary() if out.trace else None,
    }
    code = EXIT_OK
    if args.verify:
        rep = verify_outcome(g, out, args.allow_large)
        doc["verify"] = rep.to_json()
        code = EXIT_OK if rep.passed else EXIT_VERIFY
        print(rep.summary(), file=sys.stderr)
    rounds = out.trace.rounds_used if out.trace else "-"
    print(f"{algo}: n={g.n} m={g.m} |S|={len(out.sources)} edges_out={len(out.subgraph)} rounds={rounds}",
          file=sys.stderr)
    if args.out:
        _emit(out.subgraph.to_edge_list(), args.out)
    if args.provenance:
        _emit(canonical_json(out.subgraph.provenance_json()), args.provenance)
    _emit(canonical_json(doc), args.json_out)
    return code


def cmd_verify(args) -> int:
    g = read_edge_list(args.graph)
    with open(args.subgraph) as fh:
        h_raw = parse_edge_list(fh.read())
    index = {lab: i for i, lab in enumerate(g.labels)}
    try:
        h = [(index[h_raw.labels[u]], index[h_raw.labels[v]]) for u, v in h_raw.edges]
    except KeyError as exc:
        raise UsageError(f"subgraph vertex {exc.args[0]} is not in the graph") from None
    if args.beta is not None:
        rep = verify_additive(g, h, args.f, args.beta, allow_large=args.allow_large)
    else:
        srcs = _resolve_sources(g, argparse.Namespace(sources=args.sources, num_sources=None, seed=args.seed))
        rep = verify_preserver(g, h, srcs, args.f, allow_large=args.allow_large)
    print(rep.summary(args.limit), file=sys.stderr)
    _emit(rep.dumps() + "\n", args.json_out)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_experiment(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            spec = ExperimentSpec.from_dict(json.load(fh))
    else:
        gen = GraphSpec(args.generator, p=args.p, avg_degree=args.avg_degree, r=args.r,
                        cycle_length=args.cycle_length, connect=args.connect)
        spec = ExperimentSpec(gen, args.sizes, args.num_sources, args.seeds, args.algorithms, args.verify,
                              args.fail_fast, _options(args))
    records = []
    code = EXIT_OK
    try:
        for rec in run_experiment(spec):
            records.append(rec)
            print(f"{rec.graph} S={rec.S} seed={rec.seed} {rec.algorithm}: edges={rec.edges_out} "
                  f"rounds={rec.rounds_used} verify={rec.verify_pass}", file=sys.stderr)
    except VerificationFailed as exc:
        records.append(exc.record)
        code = EXIT_VERIFY
    if any(r.verify_pass is False for r in records):
        code = EXIT_VERIFY
    _emit(records_json(records, args.wall_time), args.json_out)
    if args.csv_out:
        _emit(records_csv(records), args.csv_out)
    return code


def cmd_generate(args) -> int:
    spec = GraphSpec(args.generator, args.n, args.p, args.avg_degree, args.r, args.rows, args.cols,
                     args.cycle_length, args.connect)
    g = generate(spec, args.seed)
    _emit(f"# {spec.label()} seed={args.seed}\n" + format_edge_list(g), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"congest-ftp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {"verify": cmd_verify, "experiment": cmd_experiment, "generate": cmd_generate}
    try:
        return handlers.get(args.command, cmd_build)(args)
    except SimTimeout as exc:
        print(f"congest-ftp: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (UsageError, ValueError, OSError) as exc:
        print(f"congest-ftp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

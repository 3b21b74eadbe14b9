"""Batch front-end: learn models, cross-check pairs, replay diffs, serve
simulated brokers, and extract brute-force reference models.

The full pairwise bug hunt is shell scripting over these primitives:
learn a model per implementation, cross-check every pair, replay surviving
diffs against the implementations, analyse what remains by hand.

Exit codes are a stable scripting contract: 0 success/equivalent, 1 diffs
found (or replay not confirmed), 2 usage error, 3 transport error, 4
nondeterminism detected.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .automata import (AlphabetError, MealyMachine, ModelFormatError,
                       load_model, save_model, to_dot)
from .crosscheck import (CONFIRMED, INCONCLUSIVE, apply_filters, confirm,
                         cross_check, format_diff_report, parse_diff_report,
                         parse_filter_file)
from .endpoints import open_endpoint
from .learner import NondeterminismError, learn
from .mqtt import (BROKER_NAMES, MAPPERS, extract_reference_model, get_mapper,
                   serve)
from .oracles import (RNG_ALGORITHM, RandomWalkConfig, RandomWalkOracle,
                      WMethodOracle)
from .sul import TransportError

EXIT_OK = 0
EXIT_DIFFS = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3
EXIT_NONDETERMINISM = 4


def _write_report(path: Path, items: list[tuple[str, str]]) -> None:
    text = "".join(f"{key}\t{value}\n" for key, value in items)
    path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _write_model_files(machine: MealyMachine, out: Path, title: str,
                       fig: bool) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(machine, out)
    out.with_suffix(".dot").write_text(to_dot(machine), encoding="utf-8")
    if fig:
        from . import plotting  # deferred: matplotlib is slow to import

        plotting.draw_machine(machine, out.with_suffix(".png"), title=title)


def _print_nondeterminism(exc: NondeterminismError) -> None:
    print("nondeterminism detected; witness traces:", file=sys.stderr)
    for witness in (exc.witness_a, exc.witness_b):
        print(f"  inputs:  {' '.join(witness.inputs)}", file=sys.stderr)
        print(f"  outputs: {' '.join(witness.outputs)}", file=sys.stderr)


def cmd_learn(args) -> int:
    try:
        mapper = get_mapper(args.mapper)
        endpoint = open_endpoint(args.target, mapper, args.timeout_ms,
                                 admin_reset=not args.no_admin_reset)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT

    if args.oracle == "random-walk":
        config = RandomWalkConfig(args.reset_prob, args.max_steps,
                                  args.reset_on_ce, args.seed)
        oracle = RandomWalkOracle(config)
        oracle_items = [
            ("oracle", "random-walk"),
            ("reset_prob", str(config.reset_probability)),
            ("max_steps", str(config.max_steps)),
            ("reset_on_ce", "true" if config.reset_count_on_ce else "false"),
            ("rng", RNG_ALGORITHM),
            ("seed", str(config.seed)),
        ]
    else:
        oracle = WMethodOracle(args.depth)
        oracle_items = [("oracle", "w-method"), ("depth", str(args.depth))]

    started = time.perf_counter()
    try:
        result = learn(endpoint, oracle)
    except NondeterminismError as exc:
        _print_nondeterminism(exc)
        return EXIT_NONDETERMINISM
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    finally:
        endpoint.close()
    elapsed = time.perf_counter() - started

    out = Path(args.out)
    _write_model_files(result.machine, out,
                       title=f"{args.target} / {args.mapper}",
                       fig=not args.no_fig)
    items = [("target", args.target), ("mapper", args.mapper),
             ("timeout_ms", str(args.timeout_ms))]
    items += oracle_items
    items += result.stats.report_items(result.machine.n_states)
    items += [("converged", "true" if result.converged else "false"),
              ("total_time_s", f"{elapsed:.3f}"),
              ("model", str(out))]
    _write_report(out.with_suffix(".report.tsv"), items)
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    try:
        model_a = load_model(args.model_a)
        model_b = load_model(args.model_b)
    except (ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        diffs = cross_check(model_a, model_b, args.max_diffs)
    except AlphabetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.filters:
        try:
            patterns = parse_filter_file(
                Path(args.filters).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        diffs = apply_filters(diffs, patterns)
    report = format_diff_report(diffs)
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    return EXIT_DIFFS if diffs else EXIT_OK


def cmd_replay(args) -> int:
    try:
        diffs = parse_diff_report(Path(args.diff_file).read_text(encoding="utf-8"))
        mapper = get_mapper(args.mapper)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    alphabet = set(mapper.inputs)
    for diff in diffs:
        unknown = [sym for sym in diff.inputs if sym not in alphabet]
        if unknown:
            print(f"error: diff input {unknown[0]!r} is not in mapper "
                  f"{args.mapper!r}", file=sys.stderr)
            return EXIT_USAGE
    endpoints = []
    try:
        try:
            for target in (args.target_a, args.target_b):
                endpoints.append(open_endpoint(target, mapper, args.timeout_ms,
                                               admin_reset=not args.no_admin_reset))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except TransportError as exc:
            print(f"transport error: {exc}", file=sys.stderr)
            return EXIT_TRANSPORT
        sul_a, sul_b = endpoints
        verdicts = []
        for number, diff in enumerate(diffs, start=1):
            report = confirm(diff, sul_a, sul_b)
            verdicts.append(report.verdict)
            print(f"#{number} {report.verdict}: {' '.join(diff.inputs)}")
            if report.verdict == INCONCLUSIVE:
                print(f"    error: {report.error}")
            elif report.verdict != CONFIRMED:
                print(f"    A observed: {' '.join(report.observed_a)}")
                print(f"    B observed: {' '.join(report.observed_b)}")
    finally:
        for endpoint in endpoints:
            endpoint.close()
    if not diffs:
        print("no diffs in input")
        return EXIT_OK
    if INCONCLUSIVE in verdicts:
        return EXIT_TRANSPORT
    return EXIT_OK if all(v == CONFIRMED for v in verdicts) else EXIT_DIFFS


def cmd_extract(args) -> int:
    mapper = get_mapper(args.mapper)
    mutant = BROKER_NAMES[args.broker]
    machine = extract_reference_model(mutant, mapper)
    out = Path(args.out)
    _write_model_files(machine, out, title=f"{args.broker} / {args.mapper}",
                       fig=not args.no_fig)
    print(f"extracted {machine.n_states}-state model of {args.broker} "
          f"under {args.mapper} -> {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    mutant = BROKER_NAMES[args.broker]
    server = serve(mutant, port=args.port)
    print(f"serving {args.broker} on {server.host}:{server.port} "
          "(Ctrl-C to stop)", flush=True)
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return EXIT_OK


def _add_target_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mapper", choices=sorted(MAPPERS), default="simple",
                        help="abstract input alphabet (default: simple)")
    parser.add_argument("--timeout-ms", type=int, default=100,
                        help="per-client receive timeout for TCP targets")
    parser.add_argument("--no-admin-reset", action="store_true",
                        help="do not use the loopback server's out-of-band "
                             "state reset (required for real brokers)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mqttdiff",
        description="Learn Mealy-machine models of MQTT brokers and "
                    "cross-check them for behavioral differences.")
    sub = parser.add_subparsers(dest="command", required=True)

    learn_p = sub.add_parser("learn", help="learn a model of one target")
    learn_p.add_argument("target", help="sim:<broker> or tcp://host:port")
    _add_target_options(learn_p)
    learn_p.add_argument("--oracle", choices=["random-walk", "w-method"],
                         default="random-walk")
    learn_p.add_argument("--reset-prob", type=float, default=0.05,
                         help="random walk: per-step reset probability")
    learn_p.add_argument("--max-steps", type=int, default=10000,
                         help="random walk: step budget per round")
    learn_p.add_argument("--reset-on-ce", action=argparse.BooleanOptionalAction,
                         default=True,
                         help="random walk: restart the step budget after a "
                              "counterexample")
    learn_p.add_argument("--seed", type=int, default=0)
    learn_p.add_argument("--depth", type=int, default=2,
                         help="w-method: assumed extra states in the target")
    learn_p.add_argument("--out", required=True,
                         help="model file path; .dot/.png/.report.tsv siblings "
                              "are derived from it")
    learn_p.add_argument("--no-fig", action="store_true",
                         help="skip the rendered model figure")
    learn_p.set_defaults(func=cmd_learn)

    cross_p = sub.add_parser("crosscheck",
                             help="compare two learned model files")
    cross_p.add_argument("model_a")
    cross_p.add_argument("model_b")
    cross_p.add_argument("--max-diffs", type=int, default=1,
                         help="max output differences explored along a trace")
    cross_p.add_argument("--filters", help="pattern file hiding known diffs")
    cross_p.add_argument("--out", help="also write the diff report here")
    cross_p.set_defaults(func=cmd_crosscheck)

    replay_p = sub.add_parser("replay",
                              help="replay a diff report on two targets")
    replay_p.add_argument("diff_file")
    replay_p.add_argument("target_a")
    replay_p.add_argument("target_b")
    _add_target_options(replay_p)
    replay_p.set_defaults(func=cmd_replay)

    extract_p = sub.add_parser("extract",
                               help="brute-force model of a simulated broker")
    extract_p.add_argument("broker", choices=sorted(BROKER_NAMES))
    extract_p.add_argument("--mapper", choices=sorted(MAPPERS),
                           default="simple")
    extract_p.add_argument("--out", required=True)
    extract_p.add_argument("--no-fig", action="store_true")
    extract_p.set_defaults(func=cmd_extract)

    serve_p = sub.add_parser("serve",
                             help="run a simulated broker over loopback TCP")
    serve_p.add_argument("broker", choices=sorted(BROKER_NAMES))
    serve_p.add_argument("--port", type=int, default=0,
                         help="listening port (default: ephemeral)")
    serve_p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command line front end.

Subcommands:
  run                  execute one simulation, optionally writing trace/summary
  verify-determinism   sweep workers x chaos seeds and compare digests
  fairness             estimate tie-ordering probabilities against closed forms
  compare              diff two committed trace CSV files

Exit codes: 0 success, 2 configuration error, 3 causality violation,
4 rollback livelock. A config file (JSON or flat "key = value" lines) can
supply any run option; explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    CausalityViolation,
    ConfigError,
    LivelockDetected,
    SequenceCapExceeded,
)
from .harness import (
    RunSpec,
    benchmark_sequential,
    execute,
    run_fairness,
    verify_determinism,
)
from .models import MODEL_NAMES
from .timebase import MODE_NAMES
from .trace import first_divergence_rows, read_trace_csv

RUN_DEFAULTS = {
    "model": "phold",
    "mode": "lex",
    "lps": 4,
    "remote_prob": None,
    "chain": None,
    "height": None,
    "arity": None,
    "coupled": False,
    "mean_offset": None,
    "end": 10.0,
    "seed": 1,
    "workers": 1,
    "chaos_seed": 0,
    "max_delay": 4,
    "gvt_interval": 4096,
    "seq_cap": 64,
    "naive": False,
    "trace_out": None,
    "summary_out": None,
}


def _parse_scalar(text: str):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        return t[1:-1]
    low = t.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(t, 0)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def load_config(path: str) -> dict:
    """Read a config file: JSON object, or flat key = value lines."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    else:
        data = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            data[key.strip().replace("-", "_")] = _parse_scalar(value)
    unknown = set(data) - set(RUN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {sorted(unknown)}")
    return data


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    # Defaults stay None so config-file values are only overridden by flags
    # the user actually typed.
    parser.add_argument("--config", help="config file (JSON or key = value)")
    parser.add_argument("--model", choices=MODEL_NAMES)
    parser.add_argument("--mode", choices=MODE_NAMES)
    parser.add_argument("--lps", type=int, help="number of LPs")
    parser.add_argument("--remote-prob", type=float, dest="remote_prob")
    parser.add_argument("--chain", type=int, help="event-ties chain length")
    parser.add_argument("--height", type=int, help="stress tree height")
    parser.add_argument("--arity", type=int, help="stress tree arity")
    parser.add_argument("--coupled", action="store_const", const=True,
                        help="route event-ties remotes by LP state")
    parser.add_argument("--mean-offset", type=float, dest="mean_offset",
                        help="phold mean exponential offset")
    parser.add_argument("--end", type=float, help="simulation end time")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--workers", type=int, help="PE count; 1 = sequential")
    parser.add_argument("--chaos-seed", type=int, dest="chaos_seed",
                        help="scheduling adversary seed")
    parser.add_argument("--max-delay", type=int, dest="max_delay",
                        help="max extra in-flight steps per remote message")
    parser.add_argument("--gvt-interval", type=int, dest="gvt_interval",
                        help="processed events between GVT rounds")
    parser.add_argument("--seq-cap", type=int, dest="seq_cap",
                        help="max tie-break draws per signature")
    parser.add_argument("--naive", action="store_const", const=True,
                        help="use the broken independent-draw derivation "
                             "(unbiased-single only; expected to fail)")
    parser.add_argument("--trace-out", dest="trace_out",
                        help="write committed trace CSV here")
    parser.add_argument("--summary-out", dest="summary_out",
                        help="write run summary JSON here")


def _merge_run_options(args: argparse.Namespace) -> dict:
    merged = dict(RUN_DEFAULTS)
    if args.config:
        merged.update(load_config(args.config))
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _spec_from_options(opts: dict) -> RunSpec:
    return RunSpec(
        model=opts["model"],
        mode=opts["mode"],
        n_lps=opts["lps"],
        end_time=opts["end"],
        seed=opts["seed"],
        remote_prob=opts["remote_prob"],
        chain_length=opts["chain"],
        height=opts["height"],
        arity=opts["arity"],
        coupled=bool(opts["coupled"]),
        mean_offset=opts["mean_offset"],
        workers=opts["workers"],
        chaos_seed=opts["chaos_seed"],
        max_delay=opts["max_delay"],
        gvt_interval=opts["gvt_interval"],
        seq_cap=opts["seq_cap"],
        naive=bool(opts["naive"]),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    opts = _merge_run_options(args)
    spec = _spec_from_options(opts)
    trace, metrics = execute(spec)
    print(f"model={spec.model} mode={spec.mode} lps={spec.n_lps} "
          f"end={spec.end_time:g} seed={spec.seed} workers={spec.workers} "
          f"chaos-seed={spec.chaos_seed}")
    print(f"net events: {trace.net_event_count}")
    print(f"trace digest: {trace.digest()}")
    if metrics is not None:
        print(f"rollbacks: {metrics['rollbacks']}  "
              f"rolled back events: {metrics['rolled_back']}  "
              f"anti-messages: {metrics['antis_sent']}  "
              f"efficiency: {metrics['efficiency']:.3f}")
    if opts["trace_out"]:
        trace.write_csv(opts["trace_out"])
        print(f"trace written: {opts['trace_out']}")
    if opts["summary_out"]:
        trace.write_summary(opts["summary_out"], metrics)
        print(f"summary written: {opts['summary_out']}")
    return 0


def _parse_int_list(text: str, flag: str) -> tuple:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated integers") from exc
    if not values:
        raise ConfigError(f"{flag} must list at least one integer")
    return values


def _cmd_verify(args: argparse.Namespace) -> int:
    opts = _merge_run_options(args)
    spec = _spec_from_options(opts)
    workers = _parse_int_list(args.workers_list, "--workers-list")
    chaos_seeds = _parse_int_list(args.chaos_seeds, "--chaos-seeds")
    if args.repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    report = verify_determinism(spec, workers=workers,
                                chaos_seeds=chaos_seeds, repeats=args.repeats)
    print(f"reference (sequential): {report['reference_digest']}")
    for cell in report["cells"]:
        outcome = cell.get("digest") or cell.get("error")
        mark = "ok" if cell.get("digest") == report["reference_digest"] else "!!"
        print(f"  [{mark}] workers={cell['workers']} "
              f"chaos={cell['chaos_seed']} repeat={cell['repeat']}: {outcome}")
    print(f"verdict: {report['verdict']} "
          f"({len(report['distinct_digests'])} distinct digest(s), "
          f"{report['faults']} fault(s))")
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=2) + "\n")
        print(f"report written: {args.json_out}")
    if args.expect and report["verdict"] != args.expect:
        print(f"expected verdict {args.expect!r}, got {report['verdict']!r}",
              file=sys.stderr)
        return 1
    return 0


def _cmd_fairness(args: argparse.Namespace) -> int:
    report = run_fairness(args.mode, args.depth, args.samples,
                          base_seed=args.base_seed)
    print(f"mode={report.mode} depth={report.depth} samples={report.samples}")
    print(f"p_hat={report.p_hat:.4f} ({report.successes}/{report.samples})")
    if report.expected is None:
        print("no closed-form expectation for this configuration")
    else:
        print(f"expected={report.expected:.6f} "
              f"interval=[{report.expected - report.half_width:.4f}, "
              f"{report.expected + report.half_width:.4f}] "
              f"within={report.within}")
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        print(f"report written: {args.json_out}")
    if args.strict and report.within is False:
        return 1
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    opts = _merge_run_options(args)
    spec = _spec_from_options(opts)
    result = benchmark_sequential(spec)
    print(f"mode={result['mode']} events={result['events']} "
          f"seconds={result['seconds']:.3f} "
          f"events/s={result['events_per_second']:.0f}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    rows_a = read_trace_csv(args.trace_a)
    rows_b = read_trace_csv(args.trace_b)
    where = first_divergence_rows(rows_a, rows_b)
    if where is None:
        print(f"identical: {len(rows_a)} committed events")
        return 0
    print(f"traces differ at commit index {where} "
          f"(lengths {len(rows_a)} vs {len(rows_b)})")
    for label, rows in (("a", rows_a), ("b", rows_b)):
        if where < len(rows):
            print(f"  {label}: {rows[where]}")
        else:
            print(f"  {label}: <absent>")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiewarp",
        description="Optimistic parallel discrete-event simulation with "
                    "deterministic random tie-breaking.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one simulation")
    _add_run_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify-determinism",
                           help="compare digests across workers and chaos seeds")
    _add_run_options(p_ver)
    p_ver.add_argument("--workers-list", default="1,2,4,8", dest="workers_list")
    p_ver.add_argument("--chaos-seeds", default="0,1,2", dest="chaos_seeds")
    p_ver.add_argument("--repeats", type=int, default=2)
    p_ver.add_argument("--json-out", dest="json_out")
    p_ver.add_argument("--expect",
                       choices=("deterministic", "nondeterministic", "faulted"))
    p_ver.set_defaults(func=_cmd_verify)

    p_fair = sub.add_parser("fairness",
                            help="estimate tie-ordering probabilities")
    p_fair.add_argument("--mode", required=True,
                        choices=("unbiased-single", "additive", "lex"))
    p_fair.add_argument("--depth", type=int, default=0,
                        help="zero-offset chain depth of the target event")
    p_fair.add_argument("--samples", type=int, default=1000)
    p_fair.add_argument("--base-seed", type=int, default=0, dest="base_seed")
    p_fair.add_argument("--json-out", dest="json_out")
    p_fair.add_argument("--strict", action="store_true",
                        help="exit 1 if outside the expected interval")
    p_fair.set_defaults(func=_cmd_fairness)

    p_bench = sub.add_parser("bench", help="time one sequential run")
    _add_run_options(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_cmp = sub.add_parser("compare", help="diff two trace CSV files")
    p_cmp.add_argument("trace_a")
    p_cmp.add_argument("trace_b")
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SequenceCapExceeded) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CausalityViolation as exc:
        print(f"causality violation: {exc}", file=sys.stderr)
        return 3
    except LivelockDetected as exc:
        print(f"livelock: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        # missing trace inputs, unwritable --*-out paths; keep exit 1 for
        # "traces differ" so scripts can tell the two apart
        print(f"file error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

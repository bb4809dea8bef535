"""Command line: ``run``, ``sweep`` and ``bound``.

Exit status: 0 on success, 2 for invalid arguments, 3 when a single run
hits ``--max-steps`` without consensus, 1 when ``bound --against`` finds a
cell above the bound.
"""

from __future__ import annotations

import argparse
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from shared_naming import records
from shared_naming.experiment import (
    BOUND_SLACK,
    SweepConfig,
    nd_upper_bound,
    run_sweep,
)
from shared_naming.metrics import track_run
from shared_naming.model import ConsultMissMode, GameConfig, InvalidConfig

EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_BOUND_VIOLATED = 1


def parse_lambdas(text: str) -> list[float]:
    """``0,0.25,1`` or an inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            parts = [Decimal(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            count = (stop - start) / step
            if count != count.to_integral_value():
                raise ValueError
            values = [float(start + k * step) for k in range(int(count) + 1)]
        else:
            values = [float(Decimal(p)) for p in text.split(",")]
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(
            f"bad lambda list {text!r}: use a,b,c or start:stop:step") from None
    if not values:
        raise argparse.ArgumentTypeError("empty lambda list")
    return values


def parse_ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _add_game_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--agents", type=int, help="number of agents N (default 100)")
    p.add_argument("--max-steps", type=int, help="interaction cap (default 1000*N)")
    p.add_argument("--stride", type=int, help="series sampling interval (default 1)")
    p.add_argument("--consult-miss-mode", choices=[m.value for m in ConsultMissMode],
                   help="when a consulted word is not shared: no-op (default) or collapse")
    p.add_argument("--from", dest="from_file", type=Path,
                   help="take defaults from the configuration embedded in an output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shared-naming", description="Naming game with a read-only shared memory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play a single game")
    _add_game_flags(run)
    run.add_argument("--lambda", dest="lam", type=float, help="shared-memory probability")
    run.add_argument("--shared-words", type=int, help="number C of shared words")
    run.add_argument("--seed", type=int, help="64-bit seed (default 0)")
    run.add_argument("--series", type=Path, help="CSV file for the t,n_w,n_d,s series")
    run.add_argument("--summary", type=Path, help="JSON file for the run summary")

    sweep = sub.add_parser("sweep", help="run many seeded games per (lambda, C) cell")
    _add_game_flags(sweep)
    sweep.add_argument("--lambda", dest="lam", type=parse_lambdas,
                       help="lambda list a,b,c or range start:stop:step")
    sweep.add_argument("--shared-words", type=parse_ints, help="comma list of C values")
    sweep.add_argument("--runs", type=int, help="trials per cell")
    sweep.add_argument("--seed", type=int, help="master seed (default 0)")
    sweep.add_argument("--workers", type=int, default=1, help="worker processes")
    sweep.add_argument("--out", type=Path, required=True, help="sweep table CSV")
    sweep.add_argument("--series-dir", type=Path,
                       help="directory for per-cell averaged t,n_w,n_d,s series")
    sweep.add_argument("--summary", type=Path, help="JSON document mirroring the CSV")

    bound = sub.add_parser("bound", help="upper bound on the mean peak of distinct words")
    bound.add_argument("--agents", type=int, default=100)
    bound.add_argument("--lambda", dest="lam", type=parse_lambdas, default=None)
    bound.add_argument("--shared-words", type=parse_ints, default=None)
    bound.add_argument("--against", type=Path, help="sweep CSV to compare with")
    return parser


def _pick(args, name, embedded: dict, key: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return embedded.get(key, default)


def _embedded(args) -> dict:
    if args.from_file is None:
        return {}
    return records.read_config(args.from_file)


def cmd_run(args) -> int:
    base = _embedded(args)
    agents = _pick(args, "agents", base, "n_agents", 100)
    config = GameConfig(
        n_agents=agents,
        lam=_pick(args, "lam", base, "lambda", None),
        c_words=_pick(args, "shared_words", base, "c_words", None),
        seed=_pick(args, "seed", base, "seed", 0),
        max_steps=_pick(args, "max_steps", base, "max_steps", None),
        sample_stride=_pick(args, "stride", base, "sample_stride", 1),
        consult_miss=_pick(args, "consult_miss_mode", base, "consult_miss", "no-op"),
    )
    result = track_run(config, series=args.series is not None)
    if args.series is not None:
        records.write_run_series(args.series, result)
    if args.summary is not None:
        records.write_run_summary(args.summary, result)
    if result.converged:
        where = "shared" if result.consensus_in_shared else "invented"
        print(f"converged t_conv={result.t_conv} word={result.consensus_word} ({where}) "
              f"max_nd={result.max_nd}@{result.t_max_nd} max_nw={result.max_nw}@{result.t_max_nw}")
        return 0
    print(f"not converged after {result.steps} steps (n_invented={result.n_invented})")
    return EXIT_NOT_CONVERGED


def cmd_sweep(args) -> int:
    base = _embedded(args)
    config = SweepConfig(
        n_agents=_pick(args, "agents", base, "n_agents", 100),
        lambdas=_pick(args, "lam", base, "lambdas", None),
        c_values=_pick(args, "shared_words", base, "c_values", None),
        runs_per_cell=_pick(args, "runs", base, "runs_per_cell", None),
        master_seed=_pick(args, "seed", base, "master_seed", 0),
        max_steps=_pick(args, "max_steps", base, "max_steps", None),
        sample_stride=_pick(args, "stride", base, "sample_stride", 1),
        series=args.series_dir is not None,
        workers=args.workers,
        consult_miss=_pick(args, "consult_miss_mode", base, "consult_miss", "no-op"),
    )
    for target in (args.out, args.summary):
        if target is not None and not target.parent.is_dir():
            raise OSError(f"cannot write {target}: no such directory")
    cells = run_sweep(config)
    meta = config.as_dict()
    records.write_sweep_csv(args.out, meta, cells)
    if args.summary is not None:
        records.write_sweep_summary(args.summary, meta, cells)
    if args.series_dir is not None:
        args.series_dir.mkdir(parents=True, exist_ok=True)
        for cell in cells:
            records.write_cell_series(args.series_dir, meta, cell)
    bad = sum(c.non_converged for c in cells)
    print(f"{len(cells)} cells, {config.runs_per_cell} runs each, "
          f"{bad} non-converged runs -> {args.out}")
    return 0


def cmd_bound(args) -> int:
    fmt = records.fmt
    if args.against is None:
        if args.lam is None or args.shared_words is None:
            raise InvalidConfig("lambda", "bound needs --lambda and --shared-words, or --against")
        print("n_agents,lambda,c,bound")
        for lam in args.lam:
            for c in args.shared_words:
                value = nd_upper_bound(args.agents, lam, c)
                print(f"{args.agents},{fmt(lam)},{c},{value:.15g}")
        return 0

    config, rows = records.read_sweep_csv(args.against)
    agents = config.get("n_agents", args.agents)
    print("n_agents,lambda,c,bound,observed_mean_max_nd,satisfied")
    ok = True
    for row in rows:
        value = nd_upper_bound(agents, row["lambda"], row["c"])
        observed = row["mean_max_nd"]
        satisfied = observed <= value * (1.0 + BOUND_SLACK)
        ok &= satisfied
        print(f"{agents},{fmt(row['lambda'])},{row['c']},{value:.15g},{fmt(observed)},"
              f"{fmt(satisfied)}")
    return 0 if ok else EXIT_BOUND_VIOLATED


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "bound": cmd_bound}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            for name, flag in (("lam", "--lambda"), ("shared_words", "--shared-words")):
                if getattr(args, name) is None and args.from_file is None:
                    parser.error(f"{args.command}: {flag} is required")
            if args.command == "sweep" and args.runs is None and args.from_file is None:
                parser.error("sweep: --runs is required")
        return COMMANDS[args.command](args)
    except InvalidConfig as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: invalid {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

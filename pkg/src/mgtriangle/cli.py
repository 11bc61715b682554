"""Command-line interface: ``mg-triangle run|sweep|generate|exact``.

Exit codes: 0 success, 1 usage error, 2 input or parse error,
3 unsupported window.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, TextIO

from .core import Parameters, ReservoirState, beta_for_budget
from .errors import InputError, OracleCapError, StreamParseError, UnsupportedWindowError
from .hashing import derive_seed
from .oracle import ExactTracker, exact_counts
from .stream import (
    DEFAULT_MULTIPLICITIES,
    DEFAULT_P_REPLICATE,
    FORMATS,
    EdgeStreamReader,
    TimedEdge,
    synthesize_multigraph,
    write_edge_stream,
)
from .windows import WindowSpec, estimate_many, parse_windows

log = logging.getLogger("mgtriangle")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_WINDOW = 3

SEED_ENV = "MG_TRIANGLE_SEED"
DEFAULT_EDGE_TICK = 100_000
DEFAULT_TIME_TICK = 1
DEFAULT_ORACLE_CAP = 2_000_000

REPORT_COLUMNS = [
    "row",
    "position",
    "timestamp",
    "window",
    "W_hat",
    "T_hat",
    "tau_hat",
    "sampled_window_wedges",
    "storage",
    "low_confidence",
    "tau_clamped",
    "edges_seen",
    "duplicates_sampled",
    "skipped_malformed",
    "self_loops_skipped",
]

SWEEP_COLUMNS = [
    "alpha",
    "beta",
    "repeat",
    "seed",
    "window",
    "W_hat",
    "T_hat",
    "tau_hat",
    "exact_W",
    "exact_T",
    "exact_tau",
    "rel_err_W",
    "rel_err_T",
    "abs_err_tau",
    "elist",
    "wlist",
    "storage",
]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    alpha: float = 1.0
    beta: float = 1.0
    seed: int = 0
    windows: list[WindowSpec] = field(default_factory=lambda: [WindowSpec.all()])
    report_every: int | None = None
    input: str = "-"
    input_format: str = "auto"
    no_debias: bool = False

    def __post_init__(self):
        if not self.windows:
            raise UsageError("at least one window is required")
        if self.report_every is not None and self.report_every < 1:
            raise UsageError("--report-every must be >= 1")
        try:
            Parameters(self.alpha, self.beta, self.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


class ReportWriter:
    """CSV with a header, or one JSON object per line."""

    def __init__(self, out: TextIO, columns: Sequence[str], as_json: bool = False):
        self.out = out
        self.columns = list(columns)
        self.as_json = as_json
        self._csv = None
        if not as_json:
            self._csv = csv.DictWriter(out, fieldnames=self.columns, lineterminator="\n")
            self._csv.writeheader()

    def write(self, row: dict) -> None:
        row = {c: row.get(c) for c in self.columns}
        if self.as_json:
            self.out.write(json.dumps(row) + "\n")
        else:
            self._csv.writerow({k: "" if v is None else v for k, v in row.items()})


# tick driving


def _ticks(
    stream: Iterable[TimedEdge], every: int | None
) -> Iterator[tuple[list[TimedEdge], bool]]:
    """Split a stream into batches, flagging batches that end at a report tick.

    Untimed streams tick every ``every`` edges. Timed streams tick once all
    edges with timestamp below the next boundary (first timestamp plus a
    multiple of ``every``) have been seen.
    """
    batch: list[TimedEdge] = []
    timed: bool | None = None
    boundary = 0
    count = 0
    for e in stream:
        if timed is None:
            timed = e.timestamp is not None
            every = every or (DEFAULT_TIME_TICK if timed else DEFAULT_EDGE_TICK)
            if timed:
                boundary = e.timestamp + every
        if timed and e.timestamp >= boundary:
            yield batch, True
            batch = []
            boundary += every * ((e.timestamp - boundary) // every + 1)
        batch.append(e)
        count += 1
        if not timed and count % every == 0:
            yield batch, True
            batch = []
        elif len(batch) >= 1 << 16:
            yield batch, False
            batch = []
    yield batch, False


def _counter_fields(state: ReservoirState | None, reader: EdgeStreamReader | None) -> dict:
    return {
        "edges_seen": state.edges_seen if state else 0,
        "duplicates_sampled": state.duplicates_sampled if state else 0,
        "skipped_malformed": reader.skipped_malformed if reader else 0,
        "self_loops_skipped": reader.skipped_self_loops if reader else 0,
    }


def estimate_rows(
    state: ReservoirState, windows: Sequence[WindowSpec], kind: str, reader=None
) -> list[dict]:
    rows = []
    counters = _counter_fields(state, reader)
    for est in estimate_many(state, windows):
        rows.append(
            {
                "row": kind,
                "position": est.at_position,
                "timestamp": est.at_timestamp,
                "window": est.window,
                "W_hat": est.W_hat,
                "T_hat": est.T_hat,
                "tau_hat": est.tau_hat,
                "sampled_window_wedges": est.sampled_window_wedges,
                "storage": state.storage,
                "low_confidence": int(est.low_confidence),
                "tau_clamped": int(est.tau_clamped),
                **counters,
            }
        )
    return rows


def cmd_run(
    config: RunConfig, stream: Iterable[TimedEdge], emit: Callable[[dict], None], reader=None
) -> ReservoirState:
    """Process the stream once, emitting one row per window at every tick."""
    state = ReservoirState(
        Parameters(config.alpha, config.beta, config.seed), debias=not config.no_debias
    )
    checked = False
    for batch, tick in _ticks(stream, config.report_every):
        state.consume(batch)
        if not checked and state.has_timestamps is not None:
            # fail on the first batch if a window can never be answered
            estimate_many(state, config.windows)
            checked = True
        if tick:
            for row in estimate_rows(state, config.windows, "tick", reader):
                emit(row)
    state.self_loops_skipped = reader.skipped_self_loops if reader else 0
    for row in estimate_rows(state, config.windows, "summary", reader):
        emit(row)
    return state


def exact_rows(
    tracker: ExactTracker, windows: Sequence[WindowSpec], kind: str, reader=None
) -> list[dict]:
    rows = []
    for win in windows:
        c = tracker.counts(win)
        rows.append(
            {
                "row": kind,
                "position": tracker.position,
                "timestamp": tracker.timestamp,
                "window": win.label,
                "W_hat": float(c.wedges),
                "T_hat": float(c.triangles),
                "tau_hat": c.transitivity,
                "sampled_window_wedges": c.wedges,
                "storage": len(tracker),
                "low_confidence": 0,
                "tau_clamped": 0,
                "edges_seen": tracker.position,
                "duplicates_sampled": 0,
                "skipped_malformed": reader.skipped_malformed if reader else 0,
                "self_loops_skipped": reader.skipped_self_loops if reader else 0,
            }
        )
    return rows


def cmd_exact(
    windows: Sequence[WindowSpec],
    stream: Iterable[TimedEdge],
    emit: Callable[[dict], None],
    report_every: int | None = None,
    oracle_cap: int = DEFAULT_ORACLE_CAP,
    reader=None,
) -> ExactTracker:
    """Exact counts on the same ticks and row schema as :func:`cmd_run`."""
    tracker = ExactTracker()
    checked = False
    for batch, tick in _ticks(stream, report_every):
        for e in batch:
            if e.position > oracle_cap:
                raise OracleCapError(
                    f"stream exceeds the oracle cap of {oracle_cap} edges; raise --oracle-cap"
                )
            tracker.add(e)
        if not checked and tracker.has_timestamps is not None:
            for win in windows:
                tracker.edges(win)
            checked = True
        if tick:
            for row in exact_rows(tracker, windows, "tick", reader):
                emit(row)
    for row in exact_rows(tracker, windows, "summary", reader):
        emit(row)
    return tracker


# sweep


def _rel(est: float, exact: float | None) -> float | None:
    if exact is None:
        return None
    if exact == 0:
        return 0.0 if est == 0 else math.inf
    return abs(est - exact) / exact


def _sweep_point(args) -> list[dict]:
    stream, alpha, beta, repeat, seed, windows, no_debias, exact = args
    state = ReservoirState(Parameters(alpha, beta, seed), debias=not no_debias)
    state.consume(stream)
    rows = []
    for win, est in zip(windows, estimate_many(state, windows)):
        ex = exact.get(win.label)
        rows.append(
            {
                "alpha": alpha,
                "beta": beta,
                "repeat": repeat,
                "seed": seed,
                "window": est.window,
                "W_hat": est.W_hat,
                "T_hat": est.T_hat,
                "tau_hat": est.tau_hat,
                "exact_W": ex.wedges if ex else None,
                "exact_T": ex.triangles if ex else None,
                "exact_tau": ex.transitivity if ex else None,
                "rel_err_W": _rel(est.W_hat, ex.wedges if ex else None),
                "rel_err_T": _rel(est.T_hat, ex.triangles if ex else None),
                "abs_err_tau": abs(est.tau_hat - ex.transitivity) if ex else None,
                "elist": len(state.elist),
                "wlist": len(state.wlist),
                "storage": state.storage,
            }
        )
    return rows


def cmd_sweep(
    base: RunConfig,
    stream: Sequence[TimedEdge],
    alphas: Sequence[float],
    betas: Sequence[float],
    repeats: int,
    emit: Callable[[dict], None],
    oracle_cap: int = DEFAULT_ORACLE_CAP,
    jobs: int = 1,
) -> None:
    """Run to completion for every (alpha, beta, repeat); one row per window."""
    if repeats < 1:
        raise UsageError("--repeats must be >= 1")
    for a in alphas:
        for b in betas:
            Parameters(a, b)
    exact = {}
    if len(stream) <= oracle_cap:
        exact = {w.label: exact_counts(stream, w) for w in base.windows}
    else:
        log.warning("stream longer than oracle cap %d; exact columns left empty", oracle_cap)
    tasks = [
        (stream, a, b, r, derive_seed(base.seed, r), base.windows, base.no_debias, exact)
        for b in betas
        for a in alphas
        for r in range(repeats)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_sweep_point, tasks)
            for rows in results:
                for row in rows:
                    emit(row)
    else:
        for task in tasks:
            for row in _sweep_point(task):
                emit(row)


def cmd_generate(
    source,
    out: TextIO,
    p_replicate: float = DEFAULT_P_REPLICATE,
    seed: int = 0,
    multiplicities: Sequence[int] = DEFAULT_MULTIPLICITIES,
) -> int:
    reader = EdgeStreamReader(source, "plain")
    edges = [e.edge for e in reader]
    if not edges:
        raise InputError("input has no edges")
    stream = synthesize_multigraph(edges, p_replicate, seed, multiplicities)
    return write_edge_stream(stream, out, reader.labels)


# argument parsing


def parse_float_list(text: str) -> list[float]:
    """``"0.1,0.2"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step")
        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _windows_arg(text: str) -> list[WindowSpec]:
    try:
        return parse_windows(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mg-triangle", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, sampling=True):
        p.add_argument("input", nargs="?", default="-", help="edge list path, or - for stdin")
        p.add_argument("--format", choices=FORMATS, default="auto", help="input format")
        p.add_argument("--windows", type=_windows_arg, default=[WindowSpec.all()],
                       help="comma-separated: all, last-edges:<k>, timespan:<delta>")
        p.add_argument("--json", action="store_true", help="line-delimited JSON output")
        p.add_argument("-o", "--output", default="-")
        if sampling:
            p.add_argument("--seed", type=int, default=None,
                           help=f"hash seed (default ${SEED_ENV} or 0)")
            p.add_argument("--no-debias", action="store_true",
                           help="never clear closure flags (biased control)")

    run = sub.add_parser("run", help="estimate over a stream with periodic reports")
    common(run)
    run.add_argument("--alpha", type=float, default=0.01)
    run.add_argument("--beta", type=float, default=None,
                     help="wedge sampling rate (default 1, or derived from --wedge-budget)")
    run.add_argument("--wedge-budget", type=int, default=None,
                     help="target w-list size; needs --estimated-wedges")
    run.add_argument("--estimated-wedges", type=float, default=None)
    run.add_argument("--report-every", type=int, default=None,
                     help=f"edges (default {DEFAULT_EDGE_TICK}) or timestamp units "
                          f"(default {DEFAULT_TIME_TICK}) between reports")

    sweep = sub.add_parser("sweep", help="final estimates over a grid of (alpha, beta)")
    common(sweep)
    sweep.add_argument("--alpha", dest="alphas", type=parse_float_list, required=True,
                       help="list a,b,c or range start:stop:step")
    sweep.add_argument("--beta", dest="betas", type=parse_float_list, default=[1.0])
    sweep.add_argument("--repeats", type=int, default=5)
    sweep.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    sweep.add_argument("--jobs", type=int, default=1)

    gen = sub.add_parser("generate", help="replicate edges of a simple graph into a multigraph stream")
    gen.add_argument("input", nargs="?", default="-")
    gen.add_argument("-o", "--output", default="-")
    gen.add_argument("--p-replicate", type=float, default=DEFAULT_P_REPLICATE)
    gen.add_argument("--multiplicities", type=lambda s: [int(x) for x in s.split(",")],
                     default=list(DEFAULT_MULTIPLICITIES))
    gen.add_argument("--seed", type=int, default=None)

    exact = sub.add_parser("exact", help="exact counts, same rows as run")
    common(exact, sampling=False)
    exact.add_argument("--report-every", type=int, default=None)
    exact.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    return parser


def _open_output(path: str) -> tuple[TextIO, bool]:
    if path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _dispatch(args) -> None:
    out, owned = _open_output(args.output)
    try:
        if args.command == "generate":
            seed = args.seed if args.seed is not None else _default_seed()
            if not 0.0 <= args.p_replicate <= 1.0:
                raise UsageError("--p-replicate must be in [0, 1]")
            n = cmd_generate(args.input, out, args.p_replicate, seed, args.multiplicities)
            log.info("wrote %d edges", n)
            return

        reader = EdgeStreamReader(args.input, args.format)
        if args.command == "exact":
            writer = ReportWriter(out, REPORT_COLUMNS, args.json)
            if args.report_every is not None and args.report_every < 1:
                raise UsageError("--report-every must be >= 1")
            cmd_exact(args.windows, reader, writer.write, args.report_every,
                      args.oracle_cap, reader)
            return

        seed = args.seed if args.seed is not None else _default_seed()
        if args.command == "run":
            beta = args.beta
            if args.wedge_budget is not None:
                if beta is not None:
                    raise UsageError("give either --beta or --wedge-budget, not both")
                if args.estimated_wedges is None:
                    raise UsageError("--wedge-budget needs --estimated-wedges")
                beta = beta_for_budget(args.wedge_budget, args.estimated_wedges, args.alpha)
                log.info("beta derived from budget: %g", beta)
            config = RunConfig(args.alpha, 1.0 if beta is None else beta, seed, args.windows,
                               args.report_every, args.input, args.format, args.no_debias)
            writer = ReportWriter(out, REPORT_COLUMNS, args.json)
            cmd_run(config, reader, writer.write, reader)
        else:
            config = RunConfig(1.0, 1.0, seed, args.windows, None, args.input, args.format,
                               args.no_debias)
            stream = list(reader)
            writer = ReportWriter(out, SWEEP_COLUMNS, args.json)
            try:
                cmd_sweep(config, stream, args.alphas, args.betas, args.repeats, writer.write,
                          args.oracle_cap, args.jobs)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
    finally:
        out.flush()
        if owned:
            out.close()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _dispatch(args)
    except UsageError as exc:
        print(f"mg-triangle: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedWindowError as exc:
        print(f"mg-triangle: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except (InputError, StreamParseError, OracleCapError) as exc:
        print(f"mg-triangle: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

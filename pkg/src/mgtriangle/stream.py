"""Edge streams: parsing, synthetic multigraph generation, permutation."""

from __future__ import annotations

import io
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import InputError, RejectedEdgeError, StreamParseError
from .hashing import EdgeKey, canonical_edge, vertex_id

DEFAULT_MULTIPLICITIES = (2, 4, 8, 16, 32)
DEFAULT_P_REPLICATE = 1.0 / 3.0

FORMATS = ("auto", "plain", "timestamped")

_INT64_MIN = -(1 << 63)
_INT64_MAX = (1 << 63) - 1


@dataclass(frozen=True, slots=True)
class TimedEdge:
    edge: EdgeKey
    position: int
    timestamp: int | None = None


class _Malformed(Exception):
    pass


def _split_record(line: str) -> list[str]:
    if "," in line:
        parts = [p.strip() for p in line.split(",")]
        if any(not p or any(c.isspace() for c in p) for p in parts):
            raise _Malformed
        return parts
    return line.split()


class EdgeStreamReader:
    """Iterate over the edges of a line-oriented edge list.

    ``source`` is a path, ``"-"`` for standard input, or an open text file.
    ``format`` is ``"auto"`` (timestamps used when present), ``"plain"``
    (third field ignored) or ``"timestamped"`` (third field required).
    Malformed records and self-loops are skipped and counted; after
    iteration the counts are available as ``skipped_malformed`` and
    ``skipped_self_loops``. A timestamp that goes backwards, or a file that
    mixes timed and untimed records, raises :class:`StreamParseError`.
    """

    def __init__(self, source: str | Path | TextIO, format: str = "auto"):
        if format not in FORMATS:
            raise ValueError(f"unknown stream format {format!r}")
        self.source = source
        self.format = format
        self.skipped_malformed = 0
        self.skipped_self_loops = 0
        self.has_timestamps: bool | None = None
        self.labels: dict[int, str] = {}
        self.count = 0

    @property
    def skipped(self) -> int:
        return self.skipped_malformed + self.skipped_self_loops

    def _open(self) -> tuple[TextIO, bool]:
        if isinstance(self.source, io.IOBase) or hasattr(self.source, "read"):
            return self.source, False  # type: ignore[return-value]
        if str(self.source) == "-":
            return sys.stdin, False
        try:
            return open(self.source, encoding="utf-8"), True
        except OSError as exc:
            raise InputError(f"cannot read {self.source}: {exc}") from exc

    def __iter__(self) -> Iterator[TimedEdge]:
        fh, owned = self._open()
        try:
            yield from self._records(fh)
        except UnicodeDecodeError as exc:
            raise InputError(f"{self.source} is not valid UTF-8: {exc}") from exc
        finally:
            if owned:
                fh.close()

    def _records(self, fh: TextIO) -> Iterator[TimedEdge]:
        last_ts: int | None = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line or line[0] in "#%":
                continue
            if not line.strip():
                continue
            try:
                fields = _split_record(line)
                if len(fields) not in (2, 3):
                    raise _Malformed
                ts = None
                if len(fields) == 3:
                    ts = int(fields[2], 10)
                    if not _INT64_MIN <= ts <= _INT64_MAX:
                        raise _Malformed
            except (_Malformed, ValueError):
                self.skipped_malformed += 1
                continue

            if self.format == "plain":
                ts = None
            elif self.format == "timestamped" and ts is None:
                raise StreamParseError("record has no timestamp", lineno)
            timed = ts is not None
            if self.has_timestamps is None:
                self.has_timestamps = timed
            elif self.has_timestamps != timed:
                raise StreamParseError("mixes timestamped and untimed records", lineno)
            if timed:
                if last_ts is not None and ts < last_ts:
                    raise StreamParseError(
                        f"timestamp {ts} is earlier than preceding {last_ts}", lineno
                    )
                last_ts = ts

            a, b = fields[0], fields[1]
            u, v = vertex_id(a), vertex_id(b)
            try:
                edge = canonical_edge(u, v)
            except RejectedEdgeError:
                self.skipped_self_loops += 1
                continue
            self.labels.setdefault(u, a)
            self.labels.setdefault(v, b)
            self.count += 1
            yield TimedEdge(edge, self.count, ts)


def parse_edge_stream(source: str | Path | TextIO, format: str = "auto") -> EdgeStreamReader:
    return EdgeStreamReader(source, format)


def read_edge_stream(source: str | Path | TextIO) -> list[TimedEdge]:
    return list(EdgeStreamReader(source))


def edges_from_pairs(
    pairs: Iterable[tuple[int, int]], timestamps: Iterable[int] | None = None
) -> list[TimedEdge]:
    """Build a stream from ``(u, v)`` pairs. Self-loops raise."""
    pairs = list(pairs)
    if timestamps is None:
        return [TimedEdge(canonical_edge(u, v), i) for i, (u, v) in enumerate(pairs, 1)]
    ts = list(timestamps)
    if len(ts) != len(pairs):
        raise ValueError("one timestamp per edge is required")
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise StreamParseError("timestamps must be non-decreasing")
    return [
        TimedEdge(canonical_edge(u, v), i, t)
        for i, ((u, v), t) in enumerate(zip(pairs, ts), 1)
    ]


def synthesize_multigraph(
    simple_edges: Iterable[EdgeKey],
    p_replicate: float = DEFAULT_P_REPLICATE,
    seed: int = 0,
    multiplicities: Sequence[int] = DEFAULT_MULTIPLICITIES,
) -> list[TimedEdge]:
    """Replicate each edge with probability ``p_replicate`` and shuffle.

    A replicated edge appears ``r`` times with ``r`` drawn uniformly from
    ``multiplicities``; otherwise it appears once.
    """
    edges = sorted({canonical_edge(u, v) for u, v in simple_edges})
    if not edges:
        raise ValueError("simple_edges is empty")
    if not 0.0 <= p_replicate <= 1.0:
        raise ValueError(f"p_replicate must be in [0, 1], got {p_replicate}")
    if not multiplicities or min(multiplicities) < 1:
        raise ValueError("multiplicities must be positive")

    rng = np.random.default_rng(seed)
    replicate = rng.random(len(edges)) < p_replicate
    counts = np.where(
        replicate, rng.choice(np.asarray(multiplicities), size=len(edges)), 1
    )
    multiset = [e for e, r in zip(edges, counts.tolist()) for _ in range(r)]
    order = rng.permutation(len(multiset))
    return [TimedEdge(multiset[j], i) for i, j in enumerate(order.tolist(), 1)]


def permute_stream(stream: Sequence[TimedEdge], seed: int) -> list[TimedEdge]:
    """Uniformly shuffle an untimed stream and renumber positions."""
    if any(e.timestamp is not None for e in stream):
        raise ValueError(
            "refusing to permute a timestamped stream: the result would not be time-ordered"
        )
    order = np.random.default_rng(seed).permutation(len(stream))
    return [TimedEdge(stream[j].edge, i) for i, j in enumerate(order.tolist(), 1)]


def deduplicate(stream: Iterable[TimedEdge]) -> list[TimedEdge]:
    """First occurrence of every distinct edge, positions renumbered."""
    seen: set[EdgeKey] = set()
    out = []
    for e in stream:
        if e.edge not in seen:
            seen.add(e.edge)
            out.append(TimedEdge(e.edge, len(out) + 1, e.timestamp))
    return out


def write_edge_stream(
    stream: Iterable[TimedEdge], out: TextIO, labels: dict[int, str] | None = None
) -> int:
    labels = labels or {}
    n = 0
    for e in stream:
        u, v = e.edge
        a, b = labels.get(u, str(u)), labels.get(v, str(v))
        if e.timestamp is None:
            out.write(f"{a} {b}\n")
        else:
            out.write(f"{a} {b} {e.timestamp}\n")
        n += 1
    return n

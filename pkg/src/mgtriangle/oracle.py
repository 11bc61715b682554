"""Exact wedge/triangle/transitivity counts of a (windowed) stream.

Used as ground truth. Window membership follows the estimator exactly: an
edge belongs to the window iff its last occurrence up to the query position
falls inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .errors import UnsupportedWindowError
from .hashing import EdgeKey
from .stream import TimedEdge
from .windows import ALL, LAST_EDGES, WindowSpec


@dataclass(frozen=True)
class ExactCounts:
    wedges: int
    triangles: int
    transitivity: float
    edges: int
    vertices: int


def window_edges(
    stream: Sequence[TimedEdge], win: WindowSpec, at: int | None = None
) -> set[EdgeKey]:
    """Distinct edges of the window ending at position ``at`` (default: end)."""
    if at is not None and not 0 <= at <= len(stream):
        raise ValueError(f"query position {at} outside stream of length {len(stream)}")
    tracker = ExactTracker()
    for e in stream:
        if at is not None and e.position > at:
            break
        tracker.add(e)
    return tracker.edges(win)


def adjacency_of(edges: Iterable[EdgeKey]) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def count_triangles(adj: dict[int, set[int]]) -> int:
    """Each triangle u < v < w counted once, from edge (u, v) and sorted neighbours."""
    sorted_adj = {x: sorted(n) for x, n in adj.items()}
    total = 0
    for u, nu in sorted_adj.items():
        for v in nu:
            if v <= u:
                continue
            total += _count_common_above(nu, sorted_adj[v], v)
    return total


def _count_common_above(a: list[int], b: list[int], floor: int) -> int:
    i = j = n = 0
    while i < len(a) and j < len(b):
        x, y = a[i], b[j]
        if x < y:
            i += 1
        elif y < x:
            j += 1
        else:
            if x > floor:
                n += 1
            i += 1
            j += 1
    return n


def count_triangles_naive(adj: dict[int, set[int]]) -> int:
    """Check every vertex triple. Only for small graphs."""
    return sum(
        1
        for a, b, c in combinations(sorted(adj), 3)
        if b in adj[a] and c in adj[a] and c in adj[b]
    )


def count_wedges(adj: dict[int, set[int]]) -> int:
    return sum(len(n) * (len(n) - 1) // 2 for n in adj.values())


def counts_of_edges(edges: Iterable[EdgeKey]) -> ExactCounts:
    edges = set(edges)
    adj = adjacency_of(edges)
    wedges = count_wedges(adj)
    triangles = count_triangles(adj)
    return ExactCounts(
        wedges=wedges,
        triangles=triangles,
        transitivity=3 * triangles / wedges if wedges else 0.0,
        edges=len(edges),
        vertices=len(adj),
    )


def exact_counts(
    stream: Sequence[TimedEdge], win: WindowSpec | None = None, at: int | None = None
) -> ExactCounts:
    return counts_of_edges(window_edges(stream, win or WindowSpec.all(), at))


class ExactTracker:
    """Keeps every distinct edge's last occurrence, for exact answers at report ticks."""

    def __init__(self):
        self.last_pos: dict[EdgeKey, int] = {}
        self.last_ts: dict[EdgeKey, int | None] = {}
        self.position = 0
        self.timestamp: int | None = None
        self.has_timestamps: bool | None = None

    def __len__(self) -> int:
        return len(self.last_pos)

    def add(self, e: TimedEdge) -> None:
        self.last_pos[e.edge] = e.position
        self.last_ts[e.edge] = e.timestamp
        self.position = e.position
        self.timestamp = e.timestamp
        if self.has_timestamps is None:
            self.has_timestamps = e.timestamp is not None

    def edges(self, win: WindowSpec) -> set[EdgeKey]:
        if win.kind == ALL:
            return set(self.last_pos)
        if win.kind != LAST_EDGES and self.has_timestamps is False:
            raise UnsupportedWindowError(
                f"window {win.label} needs timestamps but the stream has none"
            )
        if self.has_timestamps is None:
            return set()
        start = win.start(self.position, self.timestamp)
        if win.kind == LAST_EDGES:
            return {e for e, p in self.last_pos.items() if p >= start}
        return {e for e, t in self.last_ts.items() if t >= start}

    def counts(self, win: WindowSpec) -> ExactCounts:
        return counts_of_edges(self.edges(win))

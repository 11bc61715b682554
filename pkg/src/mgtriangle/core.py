"""The MG-Triangle reservoir: hash-sampled edges and wedges with closure flags.

Processing one stream element does three things:

1. ``update``: a sampled edge seen for the first time enters the edge list,
   and every wedge it forms with an already stored edge is offered to the
   wedge list (kept iff its own hash passes ``beta``).
2. Every stored wedge that the element closes gets its flag set.
3. Every stored wedge that *contains* the element gets its flag cleared.

Step 3 is the debiasing rule. Because of it, each triangle of the underlying
simple graph ends up with at most one flagged wedge: the one opposite the
triangle's most recently repeated edge. Nothing is ever evicted, and all of
this is independent of any query window.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hashing import (
    EdgeKey,
    WedgeKey,
    hash_unit,
    hash_unit_edges,
    wedge_prefix,
    wedge_unit_from_prefix,
    wedge_units_from_prefix,
)
from .stream import TimedEdge

_CHUNK = 1 << 16
# neighbourhood size above which candidate wedges are hashed with numpy
_VECTOR_MIN = 48


@dataclass(frozen=True)
class Parameters:
    alpha: float
    beta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def wedge_rate(self) -> float:
        """Probability that a given wedge of the graph is stored."""
        return self.alpha * self.alpha * self.beta


@dataclass(slots=True)
class EdgeEntry:
    edge: EdgeKey
    first_seen: int
    last_seen: int
    last_seen_ts: int | None = None


@dataclass(slots=True)
class WedgeRecord:
    wedge: WedgeKey
    edges: tuple[EdgeKey, EdgeKey]
    closed: bool
    formed_at: int


def beta_for_budget(wedge_budget: int, estimated_wedges: float, alpha: float) -> float:
    """Largest beta whose expected wedge-list size stays within ``wedge_budget``."""
    if wedge_budget <= 0:
        raise ValueError("wedge_budget must be positive")
    expected = alpha * alpha * estimated_wedges
    if expected <= wedge_budget:
        return 1.0
    return wedge_budget / expected


class ReservoirState:
    """Single-writer MG-Triangle state.

    Feed elements in stream order through :meth:`process_edge` or, for
    throughput, :meth:`consume`. Set ``debias=False`` to get the ablation
    that never clears flags (see :mod:`mgtriangle.baselines`).
    """

    def __init__(self, params: Parameters, debias: bool = True):
        self.params = params
        self.debias = debias
        self.elist: dict[EdgeKey, EdgeEntry] = {}
        self.adjacency: dict[int, set[int]] = {}
        self.wlist: dict[WedgeKey, WedgeRecord] = {}
        self.by_edge: dict[EdgeKey, list[WedgeRecord]] = {}
        self.by_closure: dict[EdgeKey, list[WedgeRecord]] = {}
        self.current_t = 0
        self.current_ts: int | None = None
        self.has_timestamps: bool | None = None
        self.edges_seen = 0
        self.duplicates_sampled = 0
        self.self_loops_skipped = 0

    @property
    def storage(self) -> int:
        """Stored edges, counting each wedge as two."""
        return len(self.elist) + 2 * len(self.wlist)

    def edge_sampled(self, edge: EdgeKey) -> bool:
        return hash_unit(edge, self.params.seed) <= self.params.alpha

    def wedge_sampled(self, wedge: WedgeKey) -> bool:
        return hash_unit(wedge, self.params.seed) <= self.params.beta

    # stream bookkeeping

    def _advance(self, position: int, timestamp: int | None) -> None:
        if position <= self.current_t:
            raise ValueError(
                f"stream position {position} does not follow {self.current_t}"
            )
        timed = timestamp is not None
        if self.has_timestamps is None:
            self.has_timestamps = timed
        elif timed != self.has_timestamps:
            raise ValueError("stream mixes timestamped and untimed elements")
        if timed and self.current_ts is not None and timestamp < self.current_ts:
            raise ValueError(f"timestamp {timestamp} precedes {self.current_ts}")
        self.current_t = position
        self.current_ts = timestamp
        self.edges_seen += 1

    # the algorithm

    def update(self, e: TimedEdge, sampled: bool | None = None) -> set[WedgeKey]:
        """Insert a sampled, not-yet-stored edge and the wedges it forms.

        A repeat of a stored edge only refreshes its last-seen time. Returns
        the keys of newly stored wedges.
        """
        if sampled is None:
            sampled = self.edge_sampled(e.edge)
        if not sampled:
            return set()
        entry = self.elist.get(e.edge)
        if entry is not None:
            entry.last_seen = e.position
            entry.last_seen_ts = e.timestamp
            self.duplicates_sampled += 1
            return set()
        return self._insert_edge(e.edge, e.position, e.timestamp)

    def _insert_edge(self, edge: EdgeKey, pos: int, ts: int | None) -> set[WedgeKey]:
        u, v = edge
        self.elist[edge] = EdgeEntry(edge, pos, pos, ts)
        created = set()
        seed, beta = self.params.seed, self.params.beta
        wlist, by_edge, by_closure = self.wlist, self.by_edge, self.by_closure
        for center, new_end in ((u, v), (v, u)):
            nbrs = self.adjacency.get(center)
            if nbrs is None:
                self.adjacency[center] = {new_end}
                continue
            prefix = wedge_prefix(seed, center)
            if len(nbrs) >= _VECTOR_MIN:
                others = np.fromiter(nbrs, dtype=np.uint64, count=len(nbrs))
                end = np.uint64(new_end)
                units = wedge_units_from_prefix(
                    prefix, np.minimum(others, end), np.maximum(others, end)
                )
                kept = others[units <= beta].tolist()
            else:
                kept = [
                    o
                    for o in nbrs
                    if (
                        wedge_unit_from_prefix(prefix, new_end, o)
                        if new_end < o
                        else wedge_unit_from_prefix(prefix, o, new_end)
                    )
                    <= beta
                ]
            for other in kept:
                w = (center, new_end, other) if new_end < other else (center, other, new_end)
                if w in wlist:
                    continue
                old = (center, other) if center < other else (other, center)
                rec = WedgeRecord(w, (old, edge), False, pos)
                wlist[w] = rec
                by_edge.setdefault(old, []).append(rec)
                by_edge.setdefault(edge, []).append(rec)
                by_closure.setdefault((w[1], w[2]), []).append(rec)
                created.add(w)
            nbrs.add(new_end)
        return created

    def closing_wedges(self, edge: EdgeKey) -> set[WedgeKey]:
        """Stored wedges whose open endpoints are exactly ``edge``."""
        return {r.wedge for r in self.by_closure.get(edge, ())}

    def member_wedges(self, edge: EdgeKey) -> set[WedgeKey]:
        """Stored wedges having ``edge`` as one of their two edges."""
        return {r.wedge for r in self.by_edge.get(edge, ())}

    def process_edge(self, e: TimedEdge) -> None:
        self._advance(e.position, e.timestamp)
        self._step(e.edge, e.position, e.timestamp, self.edge_sampled(e.edge))

    def _step(
        self, edge: EdgeKey, pos: int, ts: int | None, sampled: bool, debias: bool | None = None
    ) -> None:
        if sampled:
            entry = self.elist.get(edge)
            if entry is None:
                self._insert_edge(edge, pos, ts)
            else:
                entry.last_seen = pos
                entry.last_seen_ts = ts
                self.duplicates_sampled += 1
        # closers and members are disjoint: a wedge's closing pair is never one of its edges
        closers = self.by_closure.get(edge)
        if closers:
            for rec in closers:
                rec.closed = True
        if debias is None:
            debias = self.debias
        if sampled and debias:
            members = self.by_edge.get(edge)
            if members:
                for rec in members:
                    rec.closed = False

    def consume(self, stream: Iterable[TimedEdge]) -> int:
        """Process many elements; same result as repeated :meth:`process_edge`.

        Edge hashes are computed a chunk at a time with numpy, which is what
        makes unsampled elements cheap.
        """
        n = 0
        chunk: list[TimedEdge] = []
        for e in stream:
            chunk.append(e)
            if len(chunk) == _CHUNK:
                n += self._consume_chunk(chunk)
                chunk = []
        if chunk:
            n += self._consume_chunk(chunk)
        return n

    def _consume_chunk(self, chunk: list[TimedEdge]) -> int:
        self._validate_chunk(chunk)
        us = np.fromiter((e.edge[0] for e in chunk), dtype=np.uint64, count=len(chunk))
        vs = np.fromiter((e.edge[1] for e in chunk), dtype=np.uint64, count=len(chunk))
        sampled = (hash_unit_edges(us, vs, self.params.seed) <= self.params.alpha).tolist()
        step, by_closure = self._step, self.by_closure
        for e, s in zip(chunk, sampled):
            if s:
                step(e.edge, e.position, e.timestamp, True)
            else:
                # an unsampled edge can only close wedges
                closers = by_closure.get(e.edge)
                if closers:
                    for rec in closers:
                        rec.closed = True
        last = chunk[-1]
        self.current_t = last.position
        self.current_ts = last.timestamp
        self.edges_seen += len(chunk)
        return len(chunk)

    def _validate_chunk(self, chunk: list[TimedEdge]) -> None:
        """Same checks as :meth:`_advance`, done up front for a whole chunk."""
        first = chunk[0]
        if self.has_timestamps is None:
            self.has_timestamps = first.timestamp is not None
        pos = np.fromiter((e.position for e in chunk), dtype=np.int64, count=len(chunk))
        if pos[0] <= self.current_t or (len(pos) > 1 and np.any(np.diff(pos) <= 0)):
            raise ValueError("stream positions must strictly increase")
        timed = [e.timestamp is not None for e in chunk]
        if any(t != self.has_timestamps for t in timed):
            raise ValueError("stream mixes timestamped and untimed elements")
        if self.has_timestamps:
            ts = np.fromiter((e.timestamp for e in chunk), dtype=np.int64, count=len(chunk))
            prev = self.current_ts if self.current_ts is not None else ts[0]
            if ts[0] < prev or (len(ts) > 1 and np.any(np.diff(ts) < 0)):
                raise ValueError("timestamps must be non-decreasing")

    # introspection

    def flagged_wedges(self) -> int:
        return sum(1 for r in self.wlist.values() if r.closed)

    def rebuild_indices(self):
        """Recompute adjacency, by_edge and by_closure from the two lists."""
        adjacency: dict[int, set[int]] = {}
        for u, v in self.elist:
            adjacency.setdefault(u, set()).add(v)
            adjacency.setdefault(v, set()).add(u)
        by_edge: dict[EdgeKey, set[WedgeKey]] = {}
        by_closure: dict[EdgeKey, set[WedgeKey]] = {}
        for w, rec in self.wlist.items():
            for edge in rec.edges:
                by_edge.setdefault(edge, set()).add(w)
            by_closure.setdefault((w[1], w[2]), set()).add(w)
        return adjacency, by_edge, by_closure

    def index_snapshot(self):
        """The incrementally maintained indices in :meth:`rebuild_indices` form."""
        by_edge = {k: {r.wedge for r in v} for k, v in self.by_edge.items()}
        by_closure = {k: {r.wedge for r in v} for k, v in self.by_closure.items()}
        adjacency = {k: set(v) for k, v in self.adjacency.items()}
        return adjacency, by_edge, by_closure

    def fingerprint(self) -> str:
        """Digest of the full state, for determinism and purity checks."""
        h = hashlib.sha256()
        h.update(repr((self.params, self.debias, self.current_t, self.current_ts)).encode())
        h.update(repr((self.edges_seen, self.duplicates_sampled, self.self_loops_skipped)).encode())
        for edge in sorted(self.elist):
            ent = self.elist[edge]
            h.update(repr((edge, ent.first_seen, ent.last_seen, ent.last_seen_ts)).encode())
        for w in sorted(self.wlist):
            rec = self.wlist[w]
            h.update(repr((w, rec.edges, rec.closed, rec.formed_at)).encode())
        return h.hexdigest()


def run_stream(
    stream: Iterable[TimedEdge], params: Parameters, debias: bool = True
) -> ReservoirState:
    state = ReservoirState(params, debias=debias)
    state.consume(stream)
    return state

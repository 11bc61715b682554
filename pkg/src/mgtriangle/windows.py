"""Windowed wedge, triangle and transitivity estimates from one reservoir.

Windows never touch the reservoir; they only decide which stored wedges
count at query time. A wedge is in a window when both of its edges were
last seen inside it.

The closing edge is deliberately not checked. A flag that is still set was
set by a closing occurrence that came after the last occurrence of both
wedge edges (any later repeat of either edge would have cleared it), so the
closing edge is inside every window that contains the two wedge edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ReservoirState, WedgeRecord
from .errors import UnsupportedWindowError

ALL = "all"
LAST_EDGES = "last-edges"
TIMESPAN = "timespan"

LOW_CONFIDENCE_SAMPLES = 25


@dataclass(frozen=True)
class WindowSpec:
    kind: str
    size: int | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind == ALL:
            if self.size is not None:
                raise ValueError("the all-history window takes no size")
        elif self.kind in (LAST_EDGES, TIMESPAN):
            if self.size is None or self.size < 1:
                raise ValueError(f"{self.kind} window needs a size >= 1, got {self.size}")
        else:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not self.label:
            text = self.kind if self.size is None else f"{self.kind}:{self.size}"
            object.__setattr__(self, "label", text)

    @classmethod
    def all(cls) -> WindowSpec:
        return cls(ALL)

    @classmethod
    def last_edges(cls, k: int) -> WindowSpec:
        return cls(LAST_EDGES, k)

    @classmethod
    def timespan(cls, delta: int) -> WindowSpec:
        return cls(TIMESPAN, delta)

    def start(self, position: int, timestamp: int | None) -> int | None:
        """First position (or timestamp) inside the window ending now.

        ``None`` means the window has no lower bound. Timestamp windows are
        inclusive at both ends, so a span of 5 ending at 2013 covers 2009..2013.
        """
        if self.kind == ALL:
            return None
        if self.kind == LAST_EDGES:
            return position - self.size + 1
        if timestamp is None:
            raise UnsupportedWindowError(
                f"window {self.label} needs timestamps but the stream has none"
            )
        return timestamp - self.size + 1


def parse_window(text: str) -> WindowSpec:
    text = text.strip()
    if text == ALL:
        return WindowSpec.all()
    kind, sep, size = text.partition(":")
    if not sep or kind not in (LAST_EDGES, TIMESPAN):
        raise ValueError(f"bad window {text!r}; use all, last-edges:<k> or timespan:<delta>")
    try:
        n = int(size)
    except ValueError:
        raise ValueError(f"bad window size in {text!r}") from None
    return WindowSpec(kind, n)


def parse_windows(text: str) -> list[WindowSpec]:
    wins = [parse_window(part) for part in text.split(",") if part.strip()]
    if not wins:
        raise ValueError("at least one window is required")
    return wins


@dataclass(frozen=True)
class Estimates:
    window: str
    W_hat: float
    T_hat: float
    tau_hat: float
    sampled_window_wedges: int
    flagged_window_wedges: int
    at_position: int
    at_timestamp: int | None
    low_confidence: bool
    tau_clamped: bool


def _check_window(state: ReservoirState, win: WindowSpec) -> None:
    if win.kind == TIMESPAN and state.has_timestamps is False:
        raise UnsupportedWindowError(
            f"window {win.label} needs timestamps but the stream has none"
        )


def wedge_in_window(rec: WedgeRecord, state: ReservoirState, win: WindowSpec) -> bool:
    _check_window(state, win)
    if win.kind == ALL:
        return True
    start = win.start(state.current_t, state.current_ts)
    e1, e2 = (state.elist[e] for e in rec.edges)
    if win.kind == LAST_EDGES:
        return e1.last_seen >= start and e2.last_seen >= start
    return e1.last_seen_ts >= start and e2.last_seen_ts >= start


def _make_estimates(
    state: ReservoirState, win: WindowSpec, n_wedges: int, n_flagged: int
) -> Estimates:
    rate = state.params.wedge_rate
    w_hat = n_wedges / rate
    t_hat = n_flagged / rate
    tau = 3.0 * t_hat / w_hat if w_hat > 0 else 0.0
    clamped = not 0.0 <= tau <= 1.0
    return Estimates(
        window=win.label,
        W_hat=w_hat,
        T_hat=t_hat,
        tau_hat=min(max(tau, 0.0), 1.0),
        sampled_window_wedges=n_wedges,
        flagged_window_wedges=n_flagged,
        at_position=state.current_t,
        at_timestamp=state.current_ts,
        low_confidence=n_wedges < LOW_CONFIDENCE_SAMPLES,
        tau_clamped=clamped,
    )


def estimate(state: ReservoirState, win: WindowSpec) -> Estimates:
    return estimate_many(state, [win])[0]


def estimate_many(state: ReservoirState, wins: Sequence[WindowSpec]) -> list[Estimates]:
    """Estimates for every window from a single scan of the wedge list.

    Raises :class:`UnsupportedWindowError` naming every timestamp window
    when the stream carries no timestamps.
    """
    bad = [w.label for w in wins if w.kind == TIMESPAN and state.has_timestamps is False]
    if bad:
        raise UnsupportedWindowError(
            "windows need timestamps but the stream has none: " + ", ".join(bad)
        )
    # oldest last-seen position/timestamp of each wedge's two edges
    n = len(state.wlist)
    oldest_pos = np.empty(n, dtype=np.int64)
    oldest_ts = np.empty(n, dtype=np.int64) if state.has_timestamps else None
    closed = np.empty(n, dtype=bool)
    elist = state.elist
    for i, rec in enumerate(state.wlist.values()):
        a, b = elist[rec.edges[0]], elist[rec.edges[1]]
        oldest_pos[i] = min(a.last_seen, b.last_seen)
        if oldest_ts is not None:
            oldest_ts[i] = min(a.last_seen_ts, b.last_seen_ts)
        closed[i] = rec.closed

    out = []
    for win in wins:
        if win.kind == ALL or n == 0:
            inside = None
        elif win.kind == LAST_EDGES:
            inside = oldest_pos >= win.start(state.current_t, state.current_ts)
        else:
            inside = oldest_ts >= win.start(state.current_t, state.current_ts)
        if inside is None:
            n_w, n_x = n, int(closed.sum())
        else:
            n_w, n_x = int(inside.sum()), int((closed & inside).sum())
        out.append(_make_estimates(state, win, n_w, n_x))
    return out

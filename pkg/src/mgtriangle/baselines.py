"""Undebiased control: MG-Triangle without the flag-clearing step.

On a stream with repeated edges almost every stored wedge of a triangle is
eventually followed by another occurrence of its closing edge, so the flag
count overshoots and no amount of extra storage fixes it. On a duplicate-free
stream the clearing step never fires and both engines agree exactly.
"""

from __future__ import annotations

from typing import Iterable

from .core import Parameters, ReservoirState
from .stream import TimedEdge

NO_DEBIAS = "no-debias"


def no_debias_state(params: Parameters) -> ReservoirState:
    return ReservoirState(params, debias=False)


def process_edge_no_debias(state: ReservoirState, e: TimedEdge) -> None:
    """Process one element, closing flags but never clearing them."""
    state._advance(e.position, e.timestamp)
    state._step(e.edge, e.position, e.timestamp, state.edge_sampled(e.edge), debias=False)


def run_no_debias(stream: Iterable[TimedEdge], params: Parameters) -> ReservoirState:
    state = no_debias_state(params)
    state.consume(stream)
    return state

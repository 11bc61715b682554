"""Seeded hashing of edges and wedges into the unit interval.

Every sampling decision in the engine is a threshold test on one of these
hashes, so an edge is kept or dropped the same way on every occurrence no
matter how often it repeats in the stream.

The hash is a splitmix64 chain over the 64-bit words of the canonical key,
prefixed by a one-byte namespace tag. Scalar and numpy-vectorised versions
are provided and produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidWedgeError, RejectedEdgeError

MASK64 = (1 << 64) - 1

EDGE_TAG = 0x45  # b"E"
WEDGE_TAG = 0x57  # b"W"

_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_TAG_MUL = 0xD6E8FEB86659FD93

# top 53 bits scaled by 2^-53 so the float is exact and strictly below 1
_UNIT = 2.0**-53

EdgeKey = tuple[int, int]
WedgeKey = tuple[int, int, int]


def canonical_edge(u: int, v: int) -> EdgeKey:
    """Return the unordered pair ``(u, v)`` as ``(min, max)``.

    Raises :class:`RejectedEdgeError` for a self-loop.
    """
    if u == v:
        raise RejectedEdgeError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


def wedge_key(e1: EdgeKey, e2: EdgeKey) -> WedgeKey:
    """Key of the wedge formed by two edges: ``(center, lo, hi)``."""
    if e1 == e2:
        raise InvalidWedgeError(f"identical edges {e1}")
    a, b = e1
    c, d = e2
    if a == c:
        center, x, y = a, b, d
    elif a == d:
        center, x, y = a, b, c
    elif b == c:
        center, x, y = b, a, d
    elif b == d:
        center, x, y = b, a, c
    else:
        raise InvalidWedgeError(f"edges {e1} and {e2} share no vertex")
    if x == y:
        # two distinct edges sharing both endpoints cannot happen for canonical keys
        raise InvalidWedgeError(f"edges {e1} and {e2} are parallel")
    return (center, x, y) if x < y else (center, y, x)


def wedge_edges(w: WedgeKey) -> tuple[EdgeKey, EdgeKey]:
    center, lo, hi = w
    return canonical_edge(center, lo), canonical_edge(center, hi)


def closing_edge(w: WedgeKey) -> EdgeKey:
    """The edge that would turn wedge ``w`` into a triangle."""
    return (w[1], w[2])


def key_bytes(key: EdgeKey | WedgeKey) -> bytes:
    """Tagged byte encoding of a key; this is what the hash consumes."""
    tag = EDGE_TAG if len(key) == 2 else WEDGE_TAG
    return bytes([tag]) + b"".join((x & MASK64).to_bytes(8, "big") for x in key)


def _mix(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def hash64(key: EdgeKey | WedgeKey, seed: int) -> int:
    tag = EDGE_TAG if len(key) == 2 else WEDGE_TAG
    h = _mix((seed & MASK64) ^ ((tag * _TAG_MUL) & MASK64))
    for word in key:
        h = _mix(h ^ (word & MASK64))
    return h


def hash_unit(key: EdgeKey | WedgeKey, seed: int) -> float:
    """Uniform value in [0, 1) determined by ``(key, seed)`` alone."""
    return (hash64(key, seed) >> 11) * _UNIT


def wedge_prefix(seed: int, center: int) -> int:
    """Hash state after the tag and center words of a wedge key.

    Lets a caller hash many wedges around one center without redoing the
    shared part; see :func:`wedge_unit_from_prefix`.
    """
    h = _mix((seed & MASK64) ^ ((WEDGE_TAG * _TAG_MUL) & MASK64))
    return _mix(h ^ (center & MASK64))


def wedge_unit_from_prefix(prefix: int, lo: int, hi: int) -> float:
    """Equals ``hash_unit((center, lo, hi), seed)`` for the matching prefix."""
    z = ((prefix ^ lo) + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    z ^= z >> 31
    z = ((z ^ hi) + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    z ^= z >> 31
    return (z >> 11) * _UNIT


def wedge_units_from_prefix(prefix: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorised :func:`wedge_unit_from_prefix`."""
    h = _mix_array(np.uint64(prefix) ^ lo.astype(np.uint64))
    h = _mix_array(h ^ hi.astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * _UNIT


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def hash_unit_edges(u: np.ndarray, v: np.ndarray, seed: int) -> np.ndarray:
    """Vectorised :func:`hash_unit` over canonical edges ``(u[i], v[i])``."""
    start = _mix((seed & MASK64) ^ ((EDGE_TAG * _TAG_MUL) & MASK64))
    u = np.asarray(u).astype(np.uint64)
    v = np.asarray(v).astype(np.uint64)
    h = _mix_array(np.uint64(start) ^ u)
    h = _mix_array(h ^ v)
    return (h >> np.uint64(11)).astype(np.float64) * _UNIT


def derive_seed(base: int, index: int) -> int:
    """Independent-looking child seed for repeat ``index`` of a base seed."""
    return _mix(_mix(base & MASK64) ^ (index & MASK64))


def vertex_id(label: str) -> int:
    """Map a vertex label to a 64-bit id.

    Non-negative integer labels below 2^63 keep their value. Any other label is
    hashed (top bit forced on, so it cannot collide with a numeric label). The
    id depends only on the label, never on arrival order.
    """
    try:
        n = int(label)
    except ValueError:
        n = -1
    if 0 <= n < (1 << 63) and str(n) == label:
        return n
    h = 0
    for chunk in _chunks(label.encode("utf-8")):
        h = _mix(h ^ chunk)
    return h | (1 << 63)


def _chunks(data: bytes):
    yield len(data)
    for i in range(0, len(data), 8):
        yield int.from_bytes(data[i : i + 8], "big")

import random

import pytest

from mgtriangle.stream import TimedEdge, edges_from_pairs

TRIANGLE = [(1, 2), (2, 3), (1, 3)]
SQUARE_DIAG = [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)]
PATH = [(1, 2), (2, 3)]


def random_multigraph_stream(rng: random.Random, n: int, m: int, timed: bool = False):
    """Random multigraph stream over at most ``n`` vertices with ``m`` elements.

    Mixes bursty runs ("a,a,a,b,b") with interleaved repeats ("a,b,c,a,b,c").
    """
    distinct = []
    seen = set()
    for _ in range(rng.randint(1, max(1, 3 * n))):
        u, v = rng.sample(range(n), 2)
        key = (min(u, v), max(u, v))
        if key not in seen:
            seen.add(key)
            distinct.append(key)
    pairs = []
    pattern = rng.choice(["burst", "interleave", "random"])
    while len(pairs) < m:
        if pattern == "burst":
            e = rng.choice(distinct)
            pairs.extend([e] * rng.randint(1, 6))
        elif pattern == "interleave":
            block = rng.sample(distinct, min(len(distinct), rng.randint(1, 5)))
            pairs.extend(block * rng.randint(1, 4))
        else:
            pairs.append(rng.choice(distinct))
    pairs = pairs[:m]
    if not timed:
        return edges_from_pairs(pairs)
    ts, t = [], rng.randint(1900, 2000)
    for _ in pairs:
        t += rng.choice([0, 0, 0, 1, 1, 2])
        ts.append(t)
    return edges_from_pairs(pairs, ts)


@pytest.fixture
def triangle():
    return edges_from_pairs(TRIANGLE)


@pytest.fixture
def square_diag():
    return edges_from_pairs(SQUARE_DIAG)


def repeat_pairs(pairs, times):
    return edges_from_pairs(list(pairs) * times)


__all__ = ["TimedEdge", "random_multigraph_stream", "repeat_pairs", "TRIANGLE", "SQUARE_DIAG", "PATH"]


# acceptance summary: one line per criterion at the end of the run

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _ACCEPTANCE[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2])):
        status, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status}  {name}  {detail}")

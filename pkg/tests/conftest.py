from fractions import Fraction

import pytest

from ergolab.sequences import ExponentSchedule, build_schedule, enumerate_S
from ergolab.torus import make_constant


def newton_isqrt(N: int) -> int:
    """floor(sqrt(N)) by a plain integer Newton iteration (independent of math.isqrt)."""
    if N < 2:
        return N
    x = 1 << ((N.bit_length() + 1) // 2)
    while True:
        y = (x + N // x) // 2
        if y >= x:
            return x
        x = y


def golden_fraction(bits: int) -> Fraction:
    """Lower approximation of the golden mean with error below 2**-bits."""
    s = newton_isqrt(5 << (2 * bits))
    return Fraction((1 << bits) + s, 2 << bits)


@pytest.fixture(scope="session")
def alpha():
    return make_constant("golden_mean", 256)


@pytest.fixture(scope="session")
def sched2():
    return ExponentSchedule.constant(2)


@pytest.fixture(scope="session")
def sched23():
    return build_schedule([2, 3], J_max=12)


@pytest.fixture(scope="session")
def S_2_20(sched2, alpha):
    return enumerate_S(sched2, alpha, 1 << 20)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        name, passed, detail = results[num]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {num:2d}. {name}: {detail}")

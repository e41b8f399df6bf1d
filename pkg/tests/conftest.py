import itertools

import pytest

from btcvote.group import CRYPTO, TEST, TINY

ACCEPTANCE_LINES: list[str] = []


def brute_dlog(params, element):
    """Exhaustive discrete log by repeated multiplication; small groups only."""
    acc = 1
    for k in range(params.q):
        if acc == element:
            return k
        acc = acc * params.g % params.p
    raise ValueError("not in the subgroup")


@pytest.fixture
def tiny():
    return TINY


@pytest.fixture
def test_group():
    return TEST


@pytest.fixture
def crypto_group():
    return CRYPTO


@pytest.fixture
def acceptance_report():
    def report(criterion: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f": {detail}" if detail else ""))
        assert ok, f"{criterion}: {detail}"

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def consistent_secrets(q, shares, t):
    """Every f(0) over all degree-(t-1) polynomials through ``shares``.

    Enumerates every choice of the t-1 non-constant coefficients; the first
    share then fixes the constant term and the rest must match.
    """
    first, rest = shares[0], shares[1:]
    found = set()
    for high in itertools.product(range(q), repeat=t - 1):
        tail = sum(a * first.index ** (k + 1) for k, a in enumerate(high))
        a0 = (first.value - tail) % q
        coeffs = (a0, *high)
        if all(sum(a * s.index**k for k, a in enumerate(coeffs)) % q == s.value for s in rest):
            found.add(a0)
    return found

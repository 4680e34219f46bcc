from collections import defaultdict

import pytest

_TITLES = {
    1: "Example 2 reproduction",
    2: "Example 1 reproduction",
    3: "dead-zone floor",
    4: "estimator finite-time consensus",
    5: "conservation and symmetry",
    6: "adaptive-gain laws",
    7: "oracle validity",
    8: "derivative correctness",
    9: "grid refinement",
    10: "no finite escape",
}


def pytest_configure(config):
    config._acceptance = defaultdict(list)


@pytest.fixture
def criterion(request):
    """Record ``(ok, detail)`` for a numbered acceptance criterion."""

    def record(number, ok, detail):
        request.config._acceptance[number].append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        parts = results[n]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {n:>2}. {_TITLES.get(n, '')}  ({detail})")

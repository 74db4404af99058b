import pytest

from keyreuse.weakkeys import build_weak_key_table

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def weak_table():
    return build_weak_key_table()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the test still asserts on its own."""
    def record(label, ok, detail=""):
        ACCEPTANCE[request.node.name] = (label, bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for name in sorted(ACCEPTANCE):
        label, ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}" + (f" ({detail})" if detail else ""))

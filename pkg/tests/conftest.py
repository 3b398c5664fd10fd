import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance check and assert it.

    ``criterion(key, ok, detail)`` stores a PASS/FAIL line that is printed in
    the terminal summary, then fails the test if ``ok`` is false.
    """
    def check(key, ok, detail):
        _CRITERIA[key] = (bool(ok), detail)
        assert ok, f"criterion {key}: {detail}"
    return check


def _order(key):
    head = key.rstrip("abcdefgh")
    return int(head), key[len(head):]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=_order):
        ok, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}")

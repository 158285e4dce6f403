import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance outcome: criterion(number, passed, detail)."""

    def record(number: int, passed: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

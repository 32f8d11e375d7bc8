import pytest

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record a one-line acceptance verdict, shown in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])

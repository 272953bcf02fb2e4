import pytest

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class AcceptanceReport:
    def check(self, number: int, title: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        print(line)
        assert ok, line


@pytest.fixture
def acceptance() -> AcceptanceReport:
    return AcceptanceReport()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}{suffix}")

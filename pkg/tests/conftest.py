import pytest

_CRITERIA: dict[int, tuple[str, bool | None, str]] = {}


class CriterionLog:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        _CRITERIA[number] = (title, None, "did not finish")

    def check(self, ok: bool, detail: str) -> None:
        _CRITERIA[self.number] = (self.title, bool(ok), detail)
        assert ok, f"criterion {self.number} ({self.title}): {detail}"


@pytest.fixture
def criterion():
    return CriterionLog


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        tag = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{tag}] {n}. {title}: {detail}")

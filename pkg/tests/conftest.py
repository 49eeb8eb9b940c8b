import pytest

# acceptance checks grouped by criterion, echoed as one line each in the terminal summary
VERDICTS: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    VERDICTS.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    return bool(ok)


@pytest.fixture
def verdict():
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(VERDICTS):
        checks = VERDICTS[crit]
        ok = all(c for c, _ in checks)
        details = "; ".join(("" if c else "[FAIL] ") + d for c, d in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {crit:2d}: {details}")

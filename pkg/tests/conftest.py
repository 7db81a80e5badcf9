import pytest

from drgtransfer import drg, spectra

ACCEPTANCE_LINES: list[str] = []

FAMILY_CASES = [
    ("cycle", 2), ("cycle", 3), ("cycle", 4),
    ("hypercube", 3), ("hypercube", 4), ("hypercube", 5),
    ("crown", 3), ("crown", 4), ("crown", 5),
]


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=FAMILY_CASES, ids=lambda c: f"{c[0]}-{c[1]}")
def family_case(request):
    family, param = request.param
    g = drg.BUILDERS[family](param)
    strat, jp, dm = drg.stratify(g)
    return family, param, g, jp, spectra.spectrum(jp)

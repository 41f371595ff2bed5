import pytest

_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; a test that dies before recording is a FAIL."""
    state = {}

    def record(number, title, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
        state["number"] = number
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    yield record
    if not state:
        number = getattr(request.function, "criterion_number", request.node.name)
        _ACCEPTANCE[number] = f"FAIL  criterion {number:>2}  {request.node.name}: did not complete"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (not isinstance(k, int), k if isinstance(k, int) else 0)):
        terminalreporter.write_line(_ACCEPTANCE[key])

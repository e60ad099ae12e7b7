import contextlib

import pytest

_CRITERIA = []


class _Recorder:
    @contextlib.contextmanager
    def __call__(self, name):
        try:
            yield
        except pytest.skip.Exception as exc:
            _CRITERIA.append(("SKIP", name, str(exc)))
            raise
        except BaseException as exc:
            _CRITERIA.append(("FAIL", name, f"{type(exc).__name__}: {exc}".splitlines()[0]))
            raise
        _CRITERIA.append(("PASS", name, ""))

    def note(self, status, name, detail=""):
        _CRITERIA.append((status, name, detail))


@pytest.fixture
def criterion():
    """Context manager that records one acceptance line per criterion."""
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _CRITERIA:
        terminalreporter.write_line(f"{status:4}  {name}" + (f"  ({detail})" if detail else ""))

import pathlib
import sys

import pytest

from treerank.smt import SmtSession

ROOT = pathlib.Path(__file__).resolve().parent.parent
BENCHMARKS = ROOT / "benchmarks"


@pytest.fixture(scope="module")
def session():
    s = SmtSession(timeout=20.0)
    yield s
    s.close()


def bench(name: str) -> str:
    return (BENCHMARKS / name).read_text()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

import time
import warnings
from types import SimpleNamespace

import pytest

from bhdimer import pipeline
from bhdimer.io import RunConfig

_CRITERIA: dict = {}


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    _CRITERIA[number] = line
    print(line)


@pytest.fixture(scope="session")
def criteria():
    return record


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """The default end-to-end pipeline, run once per session."""
    cfg = RunConfig()
    out = tmp_path_factory.mktemp("full_default")
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sweep, jo = pipeline.run_full(cfg, out)
    return SimpleNamespace(cfg=cfg, out=out, sweep=sweep, jo=jo, runtime=time.perf_counter() - t0,
                           warnings=[str(w.message) for w in caught])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])

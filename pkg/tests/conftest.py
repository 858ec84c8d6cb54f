"""Shared fixtures and the per-criterion acceptance summary."""

import time

import numpy as np
import pytest

_ACCEPTANCE: dict[str, tuple[str, str, float]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def timer():
    """Elapsed wall time since the fixture was created."""
    start = time.perf_counter()
    return lambda: time.perf_counter() - start


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call" or not item.nodeid.split("::")[0].endswith("test_acceptance.py"):
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    _ACCEPTANCE[item.name] = ("PASS" if rep.passed else "FAIL", doc, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status, doc, dur = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status}  {doc}  ({dur:.2f} s)")

from __future__ import annotations

import sys

import pytest
from hypothesis import settings

from freepair.pingpong import certify_free
from strategies import sanov_closure

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sanov():
    return sanov_closure()


@pytest.fixture(scope="session")
def sanov_result(sanov):
    res = certify_free(sanov)
    assert res.ok, res.failures
    return res


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.summary_lines():
            terminalreporter.write_line(line)

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> list of (ok, detail); filled by test_acceptance.py
CRITERIA = {}


@pytest.fixture
def criterion():
    def record(k, ok, detail):
        CRITERIA.setdefault(k, []).append((bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        parts = CRITERIA[k]
        ok = all(p[0] for p in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")

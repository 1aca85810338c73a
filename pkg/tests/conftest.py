import re

import pytest


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nacceptance criterion {int(m.group(1))}: {verdict}")


@pytest.fixture
def rng_factory():
    import numpy as np

    return lambda seed=0: np.random.default_rng(seed)

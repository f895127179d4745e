import os
from collections import defaultdict

import numpy as np
import pytest

from cdcsim.econmodel import DEFAULT_VOLATILITY, TABLE1, EconParams
from cdcsim.lifetable import bundled_table, load_life_table
from cdcsim.steadystate import calibrated_config

# Path to a user-supplied S1PMA table (CSV with header age,qx). Tests that
# pin the published numbers skip without it.
S1PMA_ENV = "CDCSIM_S1PMA"

_criteria: dict[int, dict] = defaultdict(lambda: {"desc": "", "outcomes": []})


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, desc): acceptance criterion the test belongs to")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        n, desc = m.args
        entry = _criteria[n]
        entry["desc"] = entry["desc"] or desc
        entry["outcomes"].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        ran = [o for _, o in e["outcomes"] if o != "skipped"]
        skipped = [name for name, o in e["outcomes"] if o == "skipped"]
        status = "FAIL" if any(o == "failed" for o in ran) else ("PASS" if ran else "SKIP")
        note = f"  (skipped: {', '.join(skipped)})" if skipped else ""
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {e['desc']}{note}")


@pytest.fixture(scope="session")
def table():
    return bundled_table()


@pytest.fixture(scope="session")
def s1pma():
    path = os.environ.get(S1PMA_ENV)
    if not path or not os.path.exists(path):
        pytest.skip(f"set {S1PMA_ENV} to an S1PMA table to run this check")
    return load_life_table(path, terminal_age=121)


@pytest.fixture(scope="session")
def params():
    return TABLE1


@pytest.fixture(scope="session")
def bs_params():
    return EconParams(stock_volatility=DEFAULT_VOLATILITY)


@pytest.fixture(scope="session")
def paper_config(table, params):
    return calibrated_config(params, table)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

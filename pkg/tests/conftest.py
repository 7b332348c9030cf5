import warnings
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def write_price_csv(path, values, start="2020-01-01", freq="D"):
    import pandas as pd

    ts = pd.date_range(start, periods=len(values), freq=freq)
    with open(path, "w") as f:
        f.write("timestamp,value\n")
        for t, v in zip(ts, values):
            f.write(f"{t.isoformat()},{float(v)!r}\n")
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

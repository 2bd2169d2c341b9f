import csv

import numpy as np
import pytest

from rainpipe.dataset import WEATHER_SCHEMA
from rainpipe.synthetic import write_synthetic_csv

HEADER = [c.name for c in WEATHER_SCHEMA]


def weather_row(**cells):
    """A full weather row as text, everything missing except what is given."""
    base = {name: "NA" for name in HEADER}
    base.update(Date="2010-01-01", Location="Albury", RainTomorrow="No")
    base.update({k: str(v) for k, v in cells.items()})
    return [base[name] for name in HEADER]


def write_rows(path, rows, header=HEADER):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.csv"
    write_synthetic_csv(path, n_rows=2000, seed=11)
    return path


@pytest.fixture(scope="session")
def synth_csv_no_risk(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth_norisk.csv"
    write_synthetic_csv(path, n_rows=600, seed=5, with_risk=False)
    return path


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "REPORTED"}[ok]
    line = f"[{status}] criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import datetime as dt
from pathlib import Path

import pytest

from sivep_gesta.schema import SurveillanceRecord

import sys

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_DIR = DATA_DIR / "fixture"
GOLDEN_DIR = DATA_DIR / "golden"

#: The frozen fixture pair: 120 rows of 2020 + 80 rows of 2021.
FIXTURE_INPUTS = [
    (2020, FIXTURE_DIR / "snapshot_2020.csv"),
    (2021, FIXTURE_DIR / "snapshot_2021.csv"),
]
FIXTURE_WEEK = 16


def make_record(**kwargs) -> SurveillanceRecord:
    """Record factory for tests; dates given as ISO strings for brevity."""
    if isinstance(kwargs.get("DT_SIN_PRI"), str):
        kwargs["DT_SIN_PRI"] = dt.date.fromisoformat(kwargs["DT_SIN_PRI"])
    return SurveillanceRecord(**kwargs)


@pytest.fixture
def record_factory():
    return make_record


def random_records(rng, n):
    """Fuzzed record stream covering every funnel branch."""
    records = []
    for _ in range(n):
        date = None
        if rng.random() < 0.9:
            year = rng.choice((2019, 2020, 2021))
            date = dt.date(year, rng.randint(1, 12), rng.randint(1, 28))
        records.append(
            make_record(
                DT_SIN_PRI=date,
                SEM_PRI=rng.choice((None, *range(1, 54))),
                CS_SEXO=rng.choice((None, "F", "M", "I")),
                NU_IDADE_N=rng.choice((None, *range(0, 90))),
                CS_GESTANT=rng.choice((None, 0, 1, 2, 3, 4, 5, 6, 9)),
                PUERPERA=rng.choice((None, 1, 2, 9)),
            )
        )
    return records

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURE_CSV = REPO_ROOT / "data" / "sp_2016_2017.csv"


@pytest.fixture(scope="session")
def fixture_csv() -> Path:
    return FIXTURE_CSV


@pytest.fixture(scope="session")
def snapshots():
    from pdcalib.cohorts import parse_cohort_csv
    return parse_cohort_csv(FIXTURE_CSV)


@pytest.fixture(scope="session")
def snapshot_2016(snapshots):
    return next(s for s in snapshots if s.period == "2016")


@pytest.fixture(scope="session")
def snapshot_2017(snapshots):
    return next(s for s in snapshots if s.period == "2017")

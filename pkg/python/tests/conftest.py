import os
from pathlib import Path

import pytest

DATA_ROOT_DIR = Path(__file__).parent / "data"

RUN_SLOW = os.getenv("TRANSFERBOUND_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: statistical checks over 100 seeds, need TRANSFERBOUND_RUN_SLOW=1"
    )


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set TRANSFERBOUND_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def data_root_dir() -> Path:
    return DATA_ROOT_DIR

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `import oracles`

from dupq.corpus import load_pairs

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def pairs20():
    return load_pairs(FIXTURES / "pairs_20.csv")


@pytest.fixture(scope="session")
def pairs100():
    return load_pairs(FIXTURES / "pairs_100.csv")


@pytest.fixture(scope="session")
def pairs200():
    return load_pairs(FIXTURES / "pairs_200_overfit.csv")

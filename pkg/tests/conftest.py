import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpndd.pos import PosProjection
from dpndd.provider import DistributionProvider, MockBackend

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def mock_provider():
    return DistributionProvider(MockBackend(vocab_size=16, seed=7))


@pytest.fixture
def uniform_provider():
    return DistributionProvider(MockBackend(vocab_size=8, uniform=True))


@pytest.fixture
def small_projection():
    # 3 POS classes + OTHER over a 16-entry vocabulary
    membership = np.zeros((4, 16))
    membership[0, 0:5] = 1
    membership[1, 5:10] = 1
    membership[2, 10: 14] = 1
    membership[2, 3] = 1  # entry 3 sits in two classes
    membership[3, 14:16] = 1
    return PosProjection(("A", "B", "C", "OTHER"), membership)


@pytest.fixture
def fixtures_dir():
    return FIXTURES

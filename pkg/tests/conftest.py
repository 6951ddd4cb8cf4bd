import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from agentmesh.config import default_policy_spec
from agentmesh.simenv import preset_case_study


@pytest.fixture
def world():
    return preset_case_study()


@pytest.fixture
def spec(world):
    return default_policy_spec(world, max_steps=4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

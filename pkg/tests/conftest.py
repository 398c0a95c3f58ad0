import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bcastsim.fixtures import diamond4

# Diamond edge ids in fixture order: source r=0, then a=1, b=2, c=3.
RA, AB, BC, RB, RC, CA = range(6)

# Node-set bitmasks on the diamond.
R_ = 0b0001
RA_SET = 0b0011
RB_SET = 0b0101
RC_SET = 0b1001
RAB = 0b0111
RAC = 0b1011
RBC = 0b1101
FULL = 0b1111


@pytest.fixture
def d4():
    return diamond4()

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from halfplane_fpp.lattice import Axis, Domain, Edge, Site  # noqa: E402
from halfplane_fpp.weights import WeightOracle  # noqa: E402

# unit square: bottom 1.0, left 0.2, top 0.3, right 0.4
SQUARE = {
    Edge(Site(0, 0), Axis.H): 1.0,
    Edge(Site(0, 0), Axis.V): 0.2,
    Edge(Site(0, 1), Axis.H): 0.3,
    Edge(Site(1, 0), Axis.V): 0.4,
}


@pytest.fixture
def square_domain():
    return Domain.half_plane(0, 1, 1)


@pytest.fixture
def square_oracle():
    return WeightOracle(seed=0).with_overrides(SQUARE)

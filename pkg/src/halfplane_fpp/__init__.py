"""First-passage percolation and two-type competition on the half-plane lattice."""

__version__ = "0.1.0"

from .errors import BoxTooSmallError, DomainError, ParameterError  # noqa: E402
from .lattice import Axis, Domain, DomainKind, Edge, RegionSpec, Site  # noqa: E402
from .weights import WeightGrid, WeightOracle, edge_weight, materialize  # noqa: E402
from .fpp import passage_time, passage_time_field, restricted_passage_time  # noqa: E402
from .competition import CompetitionConfig, simulate  # noqa: E402

__all__ = [
    "Axis", "BoxTooSmallError", "CompetitionConfig", "Domain", "DomainError", "DomainKind",
    "Edge", "ParameterError", "RegionSpec", "Site", "WeightGrid", "WeightOracle",
    "edge_weight", "materialize", "passage_time", "passage_time_field",
    "restricted_passage_time", "simulate",
]

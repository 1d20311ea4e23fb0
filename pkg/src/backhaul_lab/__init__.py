"""Outage analysis of multi-hop and mesh hybrid THz/FSO backhaul networks."""

from .channels import (
    AbsorptionModel,
    AccessLinkParams,
    FsoLinkParams,
    PointingGeometry,
    ThzLinkParams,
)
from .montecarlo import RngStream, SampleSpec, estimate_outage
from .network import HopConfig, OutageEstimate, Topology, topology_outage

__version__ = "0.1.0"

PLACEHOLDER_ABSORPTION_TABLE = __path__[0] + "/data/absorption_placeholder.csv"

__all__ = [
    "AbsorptionModel",
    "AccessLinkParams",
    "FsoLinkParams",
    "HopConfig",
    "OutageEstimate",
    "PointingGeometry",
    "RngStream",
    "SampleSpec",
    "ThzLinkParams",
    "Topology",
    "estimate_outage",
    "topology_outage",
]

"""Adaptive simulation-optimization engine for drinking-water contamination response.

Core pieces: a demand-driven hydraulic solver, conservative two-tracer
transport, a consumer exposure model with demand feedback, and a dynamic
multiobjectivized NSGA-II that tracks the time-dependent optimal response
protocol (hydrant flushing + warning-dye injection) during an emergency.
"""

__version__ = "0.1.0"

from .netmodel import Network, parse_native, parse_inp_subset, nearest_intermediate_node
from .scenario import ContaminationScenario, PerceivedTimeline, perceived_at

__all__ = [
    "Network",
    "parse_native",
    "parse_inp_subset",
    "nearest_intermediate_node",
    "ContaminationScenario",
    "PerceivedTimeline",
    "perceived_at",
    "__version__",
]

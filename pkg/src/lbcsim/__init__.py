"""Cell-level simulator and analytical toolkit for a split-central-buffered
load-balancing Clos-network switch."""

from .engine import FabricState, Scenario, run, run_oq_baseline
from .metrics import MetricsReport
from .topology import SwitchGeometry
from .traffic import TrafficSpec

__version__ = "0.1.0"

__all__ = [
    "FabricState",
    "MetricsReport",
    "Scenario",
    "SwitchGeometry",
    "TrafficSpec",
    "run",
    "run_oq_baseline",
    "__version__",
]

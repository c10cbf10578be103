"""Figure generation for lbcsim sweep CSVs."""

from .figures import plot_cb_occupancy, plot_delay_vs_load
from .sweeps import SweepTable

__version__ = "0.1.0"

__all__ = ["SweepTable", "plot_cb_occupancy", "plot_delay_vs_load", "__version__"]

"""Hybrid-RIS uplink channel estimation: protocols, analysis, simulation."""

from .analysis import (AnalysisInput, ber_dd1, ber_pd, ber_pd_high_snr,
                       find_crossover, se_dd, se_pd)
from .model import ChannelRealization, Scenario, dbm_to_watts, draw_channels, watts_to_dbm
from .linalg import SeededStream

__version__ = "0.1.0"

__all__ = [
    "AnalysisInput", "ChannelRealization", "Scenario", "SeededStream",
    "ber_dd1", "ber_pd", "ber_pd_high_snr", "dbm_to_watts", "draw_channels",
    "find_crossover", "se_dd", "se_pd", "watts_to_dbm", "__version__",
]

"""Sum-secrecy-rate optimization for a RIS-aided full-duplex link with artificial noise."""

from .ao import AOTrace, initialize, run
from .bench import Scheme, SweepSpec, run_convergence, run_scheme, run_sweep
from .channel import ChannelSet, draw_channels
from .params import Geometry, Scenario, SystemParams, load_scenario, scenario_from_config
from .signal_model import BeamformingState, sum_secrecy_rate
from .subproblems import ScaSettings

__all__ = [
    "AOTrace", "BeamformingState", "ChannelSet", "Geometry", "ScaSettings", "Scenario", "Scheme",
    "SweepSpec", "SystemParams", "draw_channels", "initialize", "load_scenario", "run",
    "run_convergence", "run_scheme", "run_sweep", "scenario_from_config", "sum_secrecy_rate",
]

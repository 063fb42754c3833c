"""Federated discrete soft actor-critic control of PV/battery micro-grid houses."""

from .config import RunConfig, load_config, parse_config
from .dataset import HouseSeries, SynthProfile, load_series, save_series, synthesize_series
from .env import Action, BatterySpec, EnvParams, MicrogridEnv
from .federation import FederationSchedule, fed_average, run_federated

__all__ = [
    "Action", "BatterySpec", "EnvParams", "FederationSchedule", "HouseSeries", "MicrogridEnv",
    "RunConfig", "SynthProfile", "fed_average", "load_config", "load_series", "parse_config",
    "run_federated", "save_series", "synthesize_series",
]
__version__ = "0.1.0"

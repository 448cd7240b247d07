"""RL framework adapters over the generalsim engine."""

from .adapters import (
    ParallelBoundEnv,
    ResetNeeded,
    SingleBoundEnv,
    make_parallel,
    make_single,
    observation_dict,
)
from .config import BindingConfig, load_binding_config

__version__ = "0.1.0"

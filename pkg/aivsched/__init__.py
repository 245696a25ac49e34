"""
aivsched
Flexible job-shop simulator with AIV transport, dispatching heuristics and a multi-agent DQN scheduler
"""

__version__ = "0.1.0"

from . import core
from . import utils

__all__ = ["core", "utils"]

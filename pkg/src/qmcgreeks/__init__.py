"""Conditional pathwise Greeks of Asian and lookback options by (quasi-)Monte Carlo."""

from .bridge import BridgePlan, bridge_increments, standard_increments
from .engine import METHODS, MethodSpec, run_method, run_methods
from .exceptions import ConfigurationError, InsufficientDataError, PathRejectionError
from .products import (
    ARITHMETIC,
    BINARY,
    EUROPEAN,
    LOOKBACK,
    GreekSample,
    MarketParams,
    ProductSpec,
    cpw_greeks,
    lr_greeks,
    simulate_path,
)
from .rng import SobolGenerator, StreamSpec, make_stream, scramble, uniform_to_normal
from .stats import RunSummary, aggregate, vrf

__version__ = "0.1.0"

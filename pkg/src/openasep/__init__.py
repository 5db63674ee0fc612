"""Stationary measures of open ASEP in the fan region: matrix products,
two-layer Gibbs measures, Bernoulli bridges and the height-profile rate function."""

from .errors import (
    ConfigFileError,
    DomainError,
    EmptySetError,
    InvalidConfigError,
    OpenAsepError,
    RejectionStarvationError,
    ResourceBudgetError,
    ScopeError,
    TruncationError,
)
from .params import (
    BoundaryRates,
    FanParams,
    Phase,
    PhaseInfo,
    Region,
    classify,
    effective_densities,
    from_fan,
    phi,
    to_fan,
)
from .qkernel import FLOAT, RATIONAL, NumericMode

__version__ = "0.1.0"

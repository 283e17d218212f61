"""Capacity, generating functions and maxentropic processes of general run-length sets."""

from .capacity import CapacityResult, capacity_residual_certificate, solve_capacity
from .enumeration import (
    CountTable,
    GridError,
    WeightGrid,
    count_delta_window,
    count_strings,
    estimate_capacity_from_counts,
    grid_for,
)
from .genfun import (
    SeriesDivergenceError,
    SeriesValue,
    eval_gw,
    eval_gw_derivative,
    eval_support_gf,
    eval_system_gf,
)
from .maxent import (
    DegenerateCapacityError,
    MaxentProcess,
    build_maxent,
    canonical_support,
    entropy_rate_iid,
    markov_maxent_rate,
    monte_carlo_rate,
    BlockDraws,
    draw_blocks,
    sample_block,
    sample_process,
    validate_support,
)
from .system import (
    Arithmetic,
    ConstrainedSystem,
    Explicit,
    FiniteUnion,
    Geometric,
    LabelSet,
    RunLengthSet,
    RunString,
    Weight,
    concat,
    contains_weight,
    is_member,
)

__version__ = "0.1.0"

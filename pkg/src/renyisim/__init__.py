"""Channel simulation under Rényi divergence: measures, capacities, exponents, and exact simulation codes."""

from .capacity import (
    CapacityConvergenceError,
    CapacityResult,
    capacity_right_derivative,
    renyi_capacity,
    right_derivative_report,
)
from .distributions import (
    Channel,
    Distribution,
    JointDistribution,
    RenyiOrder,
    bsc,
    parse_channel_spec,
    random_channel,
    random_distribution,
    read_channel_file,
)
from .exponents import (
    ExponentKind,
    ExponentReport,
    beta_form_value,
    reliability_function,
    renyi_simulation_rate,
    strong_converse_exponent,
    variational_sc_exponent,
)
from .measures import (
    channel_divergence,
    relative_entropy,
    renyi_divergence,
    renyi_fidelity,
    renyi_mutual_information,
)
from .protocol import (
    SimulationScheme,
    build_product_split,
    build_rf_scheme,
    build_sc_scheme,
    build_uniform_fallback,
    converse_bound,
    induced_channel,
    induced_row,
    simulation_performance,
    ubound_reference,
)
from .sampling import RejectionPlan, TwoPhasePlan, build_schedule
from .typeclasses import (
    SymmetricTypeMixture,
    TypeVector,
    pn_exponent,
    pn_exponent_prediction,
    pn_probability,
)

__all__ = [
    "CapacityConvergenceError",
    "CapacityResult",
    "capacity_right_derivative",
    "renyi_capacity",
    "right_derivative_report",
    "Channel",
    "Distribution",
    "JointDistribution",
    "RenyiOrder",
    "bsc",
    "parse_channel_spec",
    "random_channel",
    "random_distribution",
    "read_channel_file",
    "ExponentKind",
    "ExponentReport",
    "beta_form_value",
    "reliability_function",
    "renyi_simulation_rate",
    "strong_converse_exponent",
    "variational_sc_exponent",
    "channel_divergence",
    "relative_entropy",
    "renyi_divergence",
    "renyi_fidelity",
    "renyi_mutual_information",
    "SimulationScheme",
    "build_product_split",
    "build_rf_scheme",
    "build_sc_scheme",
    "build_uniform_fallback",
    "converse_bound",
    "induced_channel",
    "induced_row",
    "simulation_performance",
    "ubound_reference",
    "RejectionPlan",
    "TwoPhasePlan",
    "build_schedule",
    "SymmetricTypeMixture",
    "TypeVector",
    "pn_exponent",
    "pn_exponent_prediction",
    "pn_probability",
]

__version__ = "0.1.0"

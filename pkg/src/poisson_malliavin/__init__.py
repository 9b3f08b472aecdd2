"""Add/drop operator calculus on finite Poisson spaces.

A point configuration over a finite weighted site set carries the whole
first-order Malliavin toolbox: add/drop difference operators, the Skorokhod
divergence, the Ornstein-Uhlenbeck generator, the Dirichlet energy, the
carre du champ, and the energy brackets.  Two expectation engines, exact
enumeration of a truncated product-Poisson state space and a seeded Monte
Carlo sampler, numerically certify every identity relating them.
"""
from .errors import (
    BoundaryLeakError,
    BudgetExceededError,
    ConfigError,
    InvalidSiteError,
    NonFiniteValueError,
    PointAbsentError,
    PoissonMalliavinError,
    ShapeError,
    SolverError,
)
from .exact import (
    ExactBackend,
    ExactExpectation,
    GeneratorMatrix,
    StateTable,
    TruncationPlan,
    build_generator_matrix,
    exact_expectation,
    exact_pairing,
    ou_pseudo_inverse,
    plan_truncation,
    state_vector,
)
from .functionals import (
    Functional,
    RandomField,
    add_diff,
    derivative_field,
    drop_diff,
    product_field,
    second_add_diff,
)
from .ground import (
    Configuration,
    GroundSpace,
    SiteSet,
    add_point,
    count_of,
    drop_point,
    measure_of,
)
from .identities import (
    DEFAULT_GATES,
    Gates,
    VerificationReport,
    bracket_expectation_check,
    chain_rule_control_check,
    commutation_check,
    duality_check,
    energy_derivation_check,
    gamma_form_bound_check,
    gamma_representation_check,
    mecke_check,
    non_diffusion_counterexample,
    product_formula_check,
    skorokhod_check,
)
from .montecarlo import (
    Estimate,
    MonteCarloBackend,
    SamplerConfig,
    mc_expectation,
    mc_mecke_defect,
    sample_configuration,
)
from .operators import (
    BracketKind,
    bracket,
    dirichlet_energy,
    divergence,
    divergence_product_defect,
    gamma,
    ou_generator,
)
from .registry import (
    affine_of,
    bounded_sigmoid,
    compose,
    constant,
    count_times_deterministic,
    deterministic_field,
    field_from_spec,
    functional_from_spec,
    functional_times_indicator,
    indicator_leq,
    linear_count,
    poly_count,
    product_of,
    random_functional_spec,
    scalar_map,
    site_indicator_field,
)
from .suite import (
    SuiteConfig,
    default_config,
    load_config,
    parse_config,
    reports_to_json,
    run_suite,
    summarize,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLeakError",
    "BudgetExceededError",
    "ConfigError",
    "InvalidSiteError",
    "NonFiniteValueError",
    "PointAbsentError",
    "PoissonMalliavinError",
    "ShapeError",
    "SolverError",
    "ExactBackend",
    "ExactExpectation",
    "GeneratorMatrix",
    "StateTable",
    "TruncationPlan",
    "build_generator_matrix",
    "exact_expectation",
    "exact_pairing",
    "ou_pseudo_inverse",
    "plan_truncation",
    "state_vector",
    "Functional",
    "RandomField",
    "add_diff",
    "derivative_field",
    "drop_diff",
    "product_field",
    "second_add_diff",
    "Configuration",
    "GroundSpace",
    "SiteSet",
    "add_point",
    "count_of",
    "drop_point",
    "measure_of",
    "DEFAULT_GATES",
    "Gates",
    "VerificationReport",
    "bracket_expectation_check",
    "chain_rule_control_check",
    "commutation_check",
    "duality_check",
    "energy_derivation_check",
    "gamma_form_bound_check",
    "gamma_representation_check",
    "mecke_check",
    "non_diffusion_counterexample",
    "product_formula_check",
    "skorokhod_check",
    "Estimate",
    "MonteCarloBackend",
    "SamplerConfig",
    "mc_expectation",
    "mc_mecke_defect",
    "sample_configuration",
    "BracketKind",
    "bracket",
    "dirichlet_energy",
    "divergence",
    "divergence_product_defect",
    "gamma",
    "ou_generator",
    "affine_of",
    "bounded_sigmoid",
    "compose",
    "constant",
    "count_times_deterministic",
    "deterministic_field",
    "field_from_spec",
    "functional_from_spec",
    "functional_times_indicator",
    "indicator_leq",
    "linear_count",
    "poly_count",
    "product_of",
    "random_functional_spec",
    "scalar_map",
    "site_indicator_field",
    "SuiteConfig",
    "default_config",
    "load_config",
    "parse_config",
    "reports_to_json",
    "run_suite",
    "summarize",
    "write_report",
]

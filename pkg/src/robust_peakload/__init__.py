"""Robust equilibria, planner optima, and price-of-anarchy certificates for
peak-load-pricing markets with polyhedral cost uncertainty."""

from robust_peakload.geometry import (
    DimensionTooLarge,
    EmptySet,
    Polytope,
    ValidationReport,
    box,
    enumerate_vertices,
    hull_to_inequalities,
    lift_product,
    simplex,
    tau,
    validate,
)
from robust_peakload.market import (
    AffineElastic,
    BadMean,
    EquilibriumSolution,
    Fixed,
    MarketInstance,
    Producer,
    cost_matrix,
    gross_surplus,
    scaling_matrix,
    solve_expected,
    solve_nominal_elastic,
    solve_nominal_fixed,
    total_cost,
    welfare,
)
from robust_peakload.poa import (
    BadAlpha,
    BadDelta,
    BadParams,
    PoAReport,
    ZeroCost,
    elastic_family_values,
    gen_elastic_family,
    gen_tight_instance_fixed,
    gen_tight_instance_restricted,
    poa_elastic,
    poa_fixed,
    tight_fixed_values,
    tight_restricted_values,
)
from robust_peakload.robust import (
    Infeasible,
    MarketRobustReport,
    RobustLp,
    RobustReport,
    SaddleViolated,
    Unbounded,
    adjustable_scenario_form_fixed,
    dispatch_at_capacity,
    lifted_set,
    lifted_vertices,
    market_robust_report,
    scenario_to_vector,
    solve_robust_cp_elastic,
    solve_robust_cp_fixed,
    solve_robust_lp,
    solve_robust_market_elastic,
    solve_robust_market_fixed,
    vector_to_scenario,
    verify_adjustable_equivalence,
    worst_case_scenario,
)
from robust_peakload.risk import (
    BadVar,
    CoherentSpec,
    DegenerateScenario,
    VarSpec,
    build_coherent_set,
    build_mvar_set,
    poa_with_risk_set,
)
from robust_peakload.subsidy import (
    FixedCapacityWelfareResult,
    NotEquilibrium,
    SubsidyBundle,
    build_price_functions,
    compute_subsidies,
    kkt_residuals,
    solve_fixed_capacity_welfare,
    verify_subsidized_equilibrium,
)
from robust_peakload.instancefile import (
    SCHEMA_VERSION,
    SchemaError,
    canonical_dumps,
    format_number,
    instance_digest,
    instance_to_data,
    load_instance,
    parse_instance_data,
    write_instance,
)
from robust_peakload.solver import (
    CERT_TOL,
    FEAS_TOL,
    PIVOT_TOL,
    LpSpec,
    NotConvex,
    NumericBreakdown,
    QpSpec,
    SolveOutcome,
    SolverError,
    solve_lp,
    solve_qp,
)

__all__ = [
    "AffineElastic",
    "BadAlpha",
    "BadDelta",
    "BadMean",
    "BadParams",
    "BadVar",
    "CERT_TOL",
    "CoherentSpec",
    "DegenerateScenario",
    "DimensionTooLarge",
    "EmptySet",
    "EquilibriumSolution",
    "FEAS_TOL",
    "Fixed",
    "FixedCapacityWelfareResult",
    "Infeasible",
    "LpSpec",
    "MarketInstance",
    "MarketRobustReport",
    "NotConvex",
    "NotEquilibrium",
    "NumericBreakdown",
    "PIVOT_TOL",
    "PoAReport",
    "Polytope",
    "Producer",
    "QpSpec",
    "RobustLp",
    "RobustReport",
    "SCHEMA_VERSION",
    "SaddleViolated",
    "SchemaError",
    "SolveOutcome",
    "SolverError",
    "SubsidyBundle",
    "Unbounded",
    "ValidationReport",
    "VarSpec",
    "ZeroCost",
    "adjustable_scenario_form_fixed",
    "box",
    "build_coherent_set",
    "build_mvar_set",
    "build_price_functions",
    "canonical_dumps",
    "compute_subsidies",
    "cost_matrix",
    "dispatch_at_capacity",
    "elastic_family_values",
    "enumerate_vertices",
    "format_number",
    "gen_elastic_family",
    "gen_tight_instance_fixed",
    "gen_tight_instance_restricted",
    "gross_surplus",
    "hull_to_inequalities",
    "instance_digest",
    "instance_to_data",
    "kkt_residuals",
    "lift_product",
    "lifted_set",
    "lifted_vertices",
    "load_instance",
    "market_robust_report",
    "parse_instance_data",
    "poa_elastic",
    "poa_fixed",
    "poa_with_risk_set",
    "scaling_matrix",
    "scenario_to_vector",
    "simplex",
    "solve_expected",
    "solve_fixed_capacity_welfare",
    "solve_lp",
    "solve_nominal_elastic",
    "solve_nominal_fixed",
    "solve_qp",
    "solve_robust_cp_elastic",
    "solve_robust_cp_fixed",
    "solve_robust_lp",
    "solve_robust_market_elastic",
    "solve_robust_market_fixed",
    "tau",
    "tight_fixed_values",
    "tight_restricted_values",
    "total_cost",
    "validate",
    "vector_to_scenario",
    "verify_adjustable_equivalence",
    "verify_subsidized_equilibrium",
    "welfare",
    "worst_case_scenario",
    "write_instance",
]

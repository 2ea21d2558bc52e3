"""Generalized Bayes shrinkage for a normal mean with unknown scale."""
from .core import (
    Admissibility,
    InvalidHyperparameterError,
    Observation,
    PriorHyper,
    ProblemDims,
    RegionLabel,
    classify,
    h_seq,
    k_seq,
    k_seq_prime,
    pi_g,
    xi_threshold,
)
from .estimators import (
    GeneralizedBayesShrinkage,
    JamesStein,
    JamesSteinVariant,
    ScaledIdentity,
    ShrinkSpec,
    delta_star,
    ibp_terms,
    identity_gap,
    james_stein,
    js_variant,
    phi_ij,
    phi_over_w,
    phi_star,
    varphi_star,
)
from .quadrature import QuadConfig, QuadratureError, QuadResult
from .risk import (
    ComparisonRow,
    RiskEstimate,
    dominance_check,
    minimax_check,
    risk_curve,
    risk_mc,
    sample_obs,
)
from .sequences import BlythReport, blyth_products

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Bernstein-Markov inequalities in Gauss space: calculus, operators, quadrature, lens geometry and sweeps."""

from .extremal import ExtremalReport, extremal_search
from .flow import (
    FlowTrace,
    hyp3_check,
    inf1_check,
    inf1_form,
    monotonicity_scan,
    necessity_witness,
)
from .hermite import (
    GaussPoly,
    MonoPoly,
    evaluate,
    gradient,
    hermitization,
    monomial_shadow,
    multi_indices,
    parseval_norm2,
    poly_arith,
    to_hermite,
    to_monomial,
)
from .inequalities import (
    InequalityVerdict,
    TrigPoly,
    bernstein_ratio,
    generator_ratio,
    restricted_range_check,
    riesz_ratio_probe,
    verify_freud_1d,
    verify_freud_infty,
    verify_lustp,
    verify_mth02,
    verify_mth03,
    verify_mth04,
    verify_rot2,
    zygmund_trig_check,
)
from .integration import (
    NormResult,
    QuadratureRule,
    expectation,
    gauss_hermite_rule,
    grad_lp_norm,
    lp_norm,
    monte_carlo_lp,
    weighted_sup_norm,
)
from .lens import (
    ConvexGauge,
    LensDomain,
    conformal_map,
    exp_gauge,
    gauge_constant,
    generator_exponent,
    grad_exponent,
    in_lens,
    lens_sup_norm,
    markov_at_one,
    moment_measure,
    polynomial_gauge,
    power_gauge,
    psd_condition,
    technical_bound,
)
from .operators import FlowPoint, gaussian_smooth, mehler, ou_generator, sqrt_minus_L

__version__ = "0.1.0"

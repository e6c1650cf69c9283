"""transient_lab: decomposition of finite sums of decaying real exponentials.

The sequential decomposer reads the slowest rate and its coefficient off
the signal's far tail, subtracts the identified term, and repeats; the
orthogonal exponential transform and a classical Prony fit provide
cross-checking baselines with complementary restrictions.
"""

from .decomposer import (DecompositionResult, StoppingPolicy, TermDiagnostics,
                         decompose_exact, decompose_numeric, reconstruct)
from .errors import (Diverging, GammaPole, NonDecaying, OutOfSupport,
                     QuadratureFailure, RankDeficient, RateCollision,
                     SignalVanished, TransientLabError)
from .functionals import (FunctionalLedger, PolynomialNoConstant,
                          apply_monomial_functional, apply_rate_functional,
                          correspondence_check, monomial_functional_matrix,
                          rate_functional_matrix)
from .oet_jacobi import (ExponentialBasis, JacobiBasis, JacobiParams,
                         build_exponential_basis, check_derivative_recurrence,
                         check_multiplication_recurrence, jacobi_monomial_coeffs,
                         oet_analyze, oet_synthesize, orthogonality_closed_form,
                         orthogonality_integral)
from .prony_baseline import PronyModel, prony_fit, vandermonde_condition
from .quadrature import QuadratureConfig, integrate_semi_infinite, integrate_unit_interval
from .signal_core import (SampledSignal, SignalSource, SymbolicTransient, combine,
                          evaluate, evaluate_many, inner_product, l2_norm_bound_check,
                          load_samples_csv, load_signal_spec, save_samples_csv,
                          save_signal_spec, subtract_term, synthesize_samples)
from .tail_limits import (RateEstimate, RateSequence, TailFitConfig,
                          estimate_coefficient, estimate_rate, rate_sequence,
                          shrink_support)

__version__ = "0.1.0"

__all__ = [
    "DecompositionResult", "StoppingPolicy", "TermDiagnostics",
    "decompose_exact", "decompose_numeric", "reconstruct",
    "TransientLabError", "OutOfSupport", "QuadratureFailure", "SignalVanished",
    "NonDecaying", "Diverging", "RateCollision", "RankDeficient", "GammaPole",
    "FunctionalLedger", "PolynomialNoConstant", "apply_monomial_functional",
    "apply_rate_functional", "correspondence_check", "monomial_functional_matrix",
    "rate_functional_matrix",
    "ExponentialBasis", "JacobiBasis", "JacobiParams", "build_exponential_basis",
    "check_derivative_recurrence", "check_multiplication_recurrence",
    "jacobi_monomial_coeffs", "oet_analyze", "oet_synthesize",
    "orthogonality_closed_form", "orthogonality_integral",
    "PronyModel", "prony_fit", "vandermonde_condition",
    "QuadratureConfig", "integrate_semi_infinite", "integrate_unit_interval",
    "SampledSignal", "SignalSource", "SymbolicTransient", "combine", "evaluate",
    "evaluate_many", "inner_product", "l2_norm_bound_check", "load_samples_csv",
    "load_signal_spec", "save_samples_csv", "save_signal_spec", "subtract_term",
    "synthesize_samples",
    "RateEstimate", "RateSequence", "TailFitConfig", "estimate_coefficient",
    "estimate_rate", "rate_sequence", "shrink_support",
]

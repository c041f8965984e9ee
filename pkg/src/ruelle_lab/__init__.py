"""Ruelle operator, Ruelle-Poincare series and atomic-measure diagnostics for rational maps."""
from ._kernels import BACKEND_NAME
from .diagnostics import DiagnosticsConfig, analyze, collet_eckmann_classify, scan_row, theorem_b_check
from .maps import INFINITY, QuadraticMap, RationalMap, conjugate_to_fix_infinity, orbit, preimages
from .measures import AtomicMeasure, build_essential_neighborhood, mu_n, mu_sequence, weak_star_probe
from .numerics import Polynomial, ScaledComplex, poly_roots
from .resolvent import decompose
from .ruelle import CauchyCombo, apply_star, apply_star_n, apply_star_oracle, apply_T, cesaro_T
from .series import backward_RS, backward_S, cauchy_product, classify, forward_series, verify_proposition_A

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "INFINITY",
    "AtomicMeasure",
    "CauchyCombo",
    "DiagnosticsConfig",
    "Polynomial",
    "QuadraticMap",
    "RationalMap",
    "ScaledComplex",
    "analyze",
    "apply_T",
    "apply_star",
    "apply_star_n",
    "apply_star_oracle",
    "backward_RS",
    "backward_S",
    "build_essential_neighborhood",
    "cauchy_product",
    "cesaro_T",
    "classify",
    "collet_eckmann_classify",
    "conjugate_to_fix_infinity",
    "decompose",
    "forward_series",
    "mu_n",
    "mu_sequence",
    "orbit",
    "poly_roots",
    "preimages",
    "scan_row",
    "theorem_b_check",
    "verify_proposition_A",
    "weak_star_probe",
]

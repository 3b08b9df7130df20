"""Exact majorization relations, Schur-Horn plan synthesis and floating-point oracles."""

from .numerics import INF, Sequence, rational
from .relations import (HOLDS, FAILS, UNKNOWN, Certificate, Verdict, approx_p_majorize, hierarchy_check,
                        majorize, p_majorize, strong_majorize)
from .synthesis import SynthesisCertificate, UnitaryPlan, horn_finite, synthesize

__all__ = [
    "INF", "Sequence", "rational",
    "HOLDS", "FAILS", "UNKNOWN", "Certificate", "Verdict",
    "majorize", "strong_majorize", "p_majorize", "approx_p_majorize", "hierarchy_check",
    "SynthesisCertificate", "UnitaryPlan", "horn_finite", "synthesize",
]
__version__ = "0.1.0"

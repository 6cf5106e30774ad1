"""Decoders and diagnostics for learned latents."""

from .decoders import (RIDGE_ALPHAS, DecodeReport, fit_classifier, fit_linear_decoder,
                       fit_logistic_decoder, standardize_fold)
from .diagnostics import (AlignmentDiagnostics, GramDiagnostics, VarianceReport,
                          alignment_diagnostics, gram_diagnostics, variance_per_latent)
from .export import write_curve_csv, write_json, write_traces_csv
from .features import FeatureView, check_features, make_folds
from .recovery import RecoveryReport, subspace_recovery
from .timeresolved import TimeCurve, time_resolved_decoding

__all__ = [
    "AlignmentDiagnostics",
    "DecodeReport",
    "FeatureView",
    "GramDiagnostics",
    "RIDGE_ALPHAS",
    "RecoveryReport",
    "TimeCurve",
    "VarianceReport",
    "alignment_diagnostics",
    "check_features",
    "fit_classifier",
    "fit_linear_decoder",
    "fit_logistic_decoder",
    "gram_diagnostics",
    "make_folds",
    "standardize_fold",
    "subspace_recovery",
    "time_resolved_decoding",
    "variance_per_latent",
    "write_curve_csv",
    "write_json",
    "write_traces_csv",
]

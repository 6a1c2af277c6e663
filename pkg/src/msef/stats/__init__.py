"""Audit statistics: classification, agreement, normality, regression, correlation."""

from .agreement import (
    BlandAltmanResult,
    ConfusionCounts,
    agreement_rate,
    bland_altman,
    out_of_range_rate,
    precision_recall_f1,
)
from .correlation import CorrMatrix, corr_matrix, pearson, spearman
from .descriptive import Tertiles, distribution_summary, quantile, tertile_recode
from .normality import shapiro_wilk, sw_coefficients
from .regression import OlsResult, PolyFit, ols_fit, poly_fit_r2, t_critical, t_two_sided_p
from .report import SCHEMA_VERSION, EvalReport, load_schema, validate_report

__all__ = [
    "BlandAltmanResult", "ConfusionCounts", "CorrMatrix", "EvalReport", "OlsResult", "PolyFit",
    "SCHEMA_VERSION", "Tertiles", "agreement_rate", "bland_altman", "corr_matrix",
    "distribution_summary", "load_schema", "ols_fit", "out_of_range_rate", "pearson",
    "poly_fit_r2", "precision_recall_f1", "quantile", "shapiro_wilk", "spearman",
    "sw_coefficients", "t_critical", "t_two_sided_p", "tertile_recode", "validate_report",
]

from .ad import ad_pvalue, ad_statistic, ad_two_sample, critical_values
from .ks import asymptotic_pvalue, exact_pvalue, ks_two_sample
from .regression import NEW, DegenerateRegressionError, RegressionFit, loglog_fit, relative_variation
from .samples import EmptySampleError, TestResult, WeightedSample
from .scan import (AnomalySegment, MissingBaselineError, PValueCurve, ScanOptions, compare_slices,
                   extract_anomaly_periods, multi_baseline_scan, preceding_seasons, season_test,
                   window_scan)

__all__ = [
    "AnomalySegment", "DegenerateRegressionError", "EmptySampleError", "MissingBaselineError",
    "NEW", "PValueCurve", "RegressionFit", "ScanOptions", "TestResult", "WeightedSample",
    "ad_pvalue", "ad_statistic", "ad_two_sample", "asymptotic_pvalue", "compare_slices",
    "critical_values", "exact_pvalue", "extract_anomaly_periods", "ks_two_sample", "loglog_fit",
    "multi_baseline_scan", "preceding_seasons", "relative_variation", "season_test", "window_scan",
]

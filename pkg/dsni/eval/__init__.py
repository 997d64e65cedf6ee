# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

from .fvd import FeatureExtractor, feature_statistics, trace_sqrt_product, frechet_distance_features, \
                 frechet_distance
from .metrics import REPORT_SCHEMA, MIN_FVD_CASES, RoiStats, MetricsReport, psnr, mae_hu, roi_stats, case_metrics, \
                     compare_roi, evaluate_cases
from .raters import EnumIccForm, ICC_NAMES, SCORE_LEVELS, RaterTable, count_stats, summarize_raters, \
                    paired_ratings, icc, icc_interval, rank_sum, wilcoxon_ranksum

__all__ = [
    # Enums
    'EnumIccForm',
    'ICC_NAMES',
    # Constants
    'REPORT_SCHEMA',
    'MIN_FVD_CASES',
    'SCORE_LEVELS',
    # Classes
    'FeatureExtractor',
    'RoiStats',
    'MetricsReport',
    'RaterTable',
    # Image metrics
    'psnr',
    'mae_hu',
    'roi_stats',
    'case_metrics',
    'compare_roi',
    'evaluate_cases',
    # Frechet distance
    'feature_statistics',
    'trace_sqrt_product',
    'frechet_distance_features',
    'frechet_distance',
    # Reader statistics
    'count_stats',
    'summarize_raters',
    'paired_ratings',
    'icc',
    'icc_interval',
    'rank_sum',
    'wilcoxon_ranksum'
]

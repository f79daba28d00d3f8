"""Python interface to the emosem toolkit.

Library errors are raised as ``EmosemError`` (a ``ValueError``) whose
``args`` are ``(code, message)``.
"""

import json

from ._core import (
    EmosemError,
    binarize_evoked,
    build_prompt,
    cosine_similarity,
    coverage_check,
    dataset_stats,
    emotions,
    krippendorff_alpha,
    load_records,
    masi_distance,
    normal_cdf,
    parse_segmentation,
    rule_based_segment,
    run_cli,
    synthesize_corpus,
    wilcoxon_signed_rank,
    word_error_rate,
)
from ._core import run_experiment_json as _run_experiment_json

__all__ = [
    "EmosemError",
    "binarize_evoked",
    "build_prompt",
    "cosine_similarity",
    "coverage_check",
    "dataset_stats",
    "emotions",
    "krippendorff_alpha",
    "load_records",
    "masi_distance",
    "normal_cdf",
    "parse_segmentation",
    "rule_based_segment",
    "run_cli",
    "run_experiment",
    "synthesize_corpus",
    "wilcoxon_signed_rank",
    "word_error_rate",
]

__version__ = "0.1.0"


def run_experiment(config=None, output_dir="emosem_out"):
    """Run the full experiment and return the metrics report as a dict."""
    return json.loads(_run_experiment_json(config, str(output_dir)))

"""Python bindings for the studysim core."""

import json as _json

from ._studysim import (
    Pipeline,
    StudysimError,
    averaged_gain,
    bloom_depth,
    default_config_yaml,
    distinct_study_sets,
    eig,
    entropy,
    exam_score,
    filter_by_utility,
    format_score_gain,
    rouge_l,
    spearman,
)
from ._studysim import extract_json as _extract_json


def extract_json(raw):
    """First JSON object in an LM reply, as a dict."""
    return _json.loads(_extract_json(raw))


__all__ = [
    "Pipeline",
    "StudysimError",
    "averaged_gain",
    "bloom_depth",
    "default_config_yaml",
    "distinct_study_sets",
    "eig",
    "entropy",
    "exam_score",
    "extract_json",
    "filter_by_utility",
    "format_score_gain",
    "rouge_l",
    "spearman",
]

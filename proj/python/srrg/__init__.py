"""Structured radiology report toolkit (C++ core)."""

from ._core import (
    SrrgError,
    bleu,
    build_disease_prompt,
    class_universe,
    consensus,
    diff_stats,
    f1_srr,
    keyword_label,
    label_consistency,
    multilabel_prf,
    parse_disease_response,
    parse_report,
    render_report,
    review_summary,
    rouge_l,
    taxonomy_leaves,
    taxonomy_uppers,
    upper_of,
    utterances,
    validate,
)

__version__ = "0.1.0"

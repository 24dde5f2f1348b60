"""Operation chains and the Protective Operation Chain (POC) feature mapping."""

from .chain import Binary, Chain, Leaf, Unary, eval_chain, evaluate, leaves, parse_chain, replace_leaf
from .mapping import (
    DEFAULT_MAX_SIZE,
    DEFAULT_PSI,
    FeatureMap,
    choose_features,
    compute_new_feature,
    deserialize_map,
    generate_map,
    prevalence,
    required_coverage,
    serialize_map,
    transform,
)
from .ops import BINARY_TAGS, BOUND, EPS, UNARY_TAGS, FmopSet, apply_binary, apply_unary

__all__ = [
    "BINARY_TAGS",
    "BOUND",
    "Binary",
    "Chain",
    "DEFAULT_MAX_SIZE",
    "DEFAULT_PSI",
    "EPS",
    "FeatureMap",
    "FmopSet",
    "Leaf",
    "UNARY_TAGS",
    "Unary",
    "apply_binary",
    "apply_unary",
    "choose_features",
    "compute_new_feature",
    "deserialize_map",
    "eval_chain",
    "evaluate",
    "generate_map",
    "leaves",
    "parse_chain",
    "prevalence",
    "replace_leaf",
    "required_coverage",
    "serialize_map",
    "transform",
]

"""Spanning structures in dense r-uniform hypergraphs: matchings, trees, loose cycles."""

from .absorb import PMResult, perfect_matching, verify_perfect_matching
from .eprim import HypothesisError, find_linear_path, find_matching
from .hcore import HypergraphError, RGraph, hole_exact, hole_heuristic, validate
from .htree import Hypertree, pendant_or_caterpillars, tree_split, validate_hypertree
from .span import (
    Embedding,
    PipelineError,
    embed_almost_spanning,
    embed_spanning_tree,
    loose_hamilton,
    rainbow_embed,
    verify_embedding,
)

__version__ = "0.1.0"

__all__ = [
    "Embedding",
    "HypergraphError",
    "Hypertree",
    "HypothesisError",
    "PMResult",
    "PipelineError",
    "RGraph",
    "embed_almost_spanning",
    "embed_spanning_tree",
    "find_linear_path",
    "find_matching",
    "hole_exact",
    "hole_heuristic",
    "loose_hamilton",
    "pendant_or_caterpillars",
    "perfect_matching",
    "rainbow_embed",
    "tree_split",
    "validate",
    "validate_hypertree",
    "verify_embedding",
    "verify_perfect_matching",
]

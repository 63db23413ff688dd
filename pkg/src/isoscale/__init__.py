"""Screening assessment items with signed isotonic scalability coefficients."""

from .dataset import ItemLabelSet, ResponseMatrix, column, load_labels, load_matrix, write_matrix
from .evalrank import AucResult, ItemScoreVector, RocCurve, auc, average_rank, borda, roc_points
from .isotonic import (
    IsotonicFit,
    NeighborStrategy,
    PairwiseScoreMatrix,
    SignedPairCoefficient,
    isotonic_r2,
    item_fit,
    kendall_tau,
    pairwise_matrix,
    pava_fit,
    rest_iso_r2,
    signed_iso,
)
from .contingency import ContingencyCounts, contingency_counts, pair_measure, interitem_item_score
from .synthgen import GeneratorConfig, generate, inject

__version__ = "0.1.0"

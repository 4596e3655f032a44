"""Structure recovery for sparse Gaussian graphical models.

DICE reaches the information-theoretic sample complexity; SLICE trades a
``1 / kappa^2`` factor in samples for a much cheaper search. Both are exposed
as scikit-learn estimators and as plain functions in :mod:`ggmstruct.dice`
and :mod:`ggmstruct.slice`.
"""

from .bounds import SamplePlan, dice_sample_bound, it_lower_bound, plan, slice_sample_bound
from .estimators import DiceGraph, SliceGraph
from .graph import GraphEstimate
from .model import (
    FourNode,
    GgmInstance,
    RegularRandom,
    ThreeNode,
    TriangleCloud,
    build_instance,
    conditional_correlation,
    normalized_strength,
    true_min_kappa,
)
from .regression import L0Solution, Strategy, SubsetRegression, l0_least_squares, subset_regression
from .sampling import CovarianceEstimate, MeanMode, SampleSet, empirical_covariance, sample

__version__ = "0.1.0"

__all__ = [
    "CovarianceEstimate",
    "DiceGraph",
    "FourNode",
    "GgmInstance",
    "GraphEstimate",
    "L0Solution",
    "MeanMode",
    "RegularRandom",
    "SamplePlan",
    "SampleSet",
    "SliceGraph",
    "Strategy",
    "SubsetRegression",
    "ThreeNode",
    "TriangleCloud",
    "build_instance",
    "conditional_correlation",
    "dice_sample_bound",
    "empirical_covariance",
    "it_lower_bound",
    "l0_least_squares",
    "normalized_strength",
    "plan",
    "sample",
    "slice_sample_bound",
    "subset_regression",
    "true_min_kappa",
]

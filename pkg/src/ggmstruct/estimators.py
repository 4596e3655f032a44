"""scikit-learn compatible estimators wrapping DICE and SLICE."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .dice import dice
from .exceptions import InsufficientSamples
from .regression import Strategy
from .slice import slice as _slice


def _covariance(X, assume_centered):
    n = X.shape[0]
    if assume_centered:
        return X.T @ X / n
    if n < 2:
        raise InsufficientSamples("centered covariance needs at least 2 samples")
    Xc = X - X.mean(axis=0)
    return Xc.T @ Xc / (n - 1)


def _check_covariance(covariance):
    S = check_array(covariance, ensure_min_samples=2, ensure_min_features=2)
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"covariance must be square, got shape {S.shape}")
    return 0.5 * (S + S.T)


class _GraphEstimatorMixin:
    """Shared fitting plumbing; subclasses implement ``_recover(S)``."""

    def fit(self, X, y=None):
        """Recover the graph from samples.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            Observations, one row per sample.
        y : ignored
        """
        X = validate_data(self, X, ensure_min_features=2)
        S = _covariance(X, self.assume_centered)
        self.n_samples_fit_ = X.shape[0]
        return self._fit_covariance(S)

    def fit_covariance(self, covariance, n_samples=None):
        """Recover the graph from a precomputed (possibly exact) covariance."""
        S = _check_covariance(covariance)
        self.n_features_in_ = S.shape[0]
        self.n_samples_fit_ = n_samples
        return self._fit_covariance(S)

    def _fit_covariance(self, S):
        self.covariance_ = S
        self.graph_ = self._recover(S)
        self.edges_ = sorted(self.graph_.edges)
        self.adjacency_ = self.graph_.adjacency()
        self.neighborhoods_ = dict(self.graph_.neighborhoods)
        self.kappa_hat_ = dict(self.graph_.kappa_hat)
        return self

    def get_adjacency(self):
        check_is_fitted(self, "graph_")
        return self.adjacency_.copy()

    def score(self, X=None, y=None):
        """Not a likelihood model; fraction of vertices whose neighborhood is
        symmetric, a cheap self-consistency diagnostic."""
        check_is_fitted(self, "graph_")
        return 1.0 - len(self.graph_.asymmetric_pairs) / max(1, self.graph_.p)


class DiceGraph(_GraphEstimatorMixin, BaseEstimator):
    """Sample-optimal structure recovery via iterative support testing.

    Parameters
    ----------
    max_degree : int
        Upper bound ``d`` on the degree of every vertex.
    kappa : float
        Lower bound on the normalized strength of every true edge.
    assume_centered : bool, default=True
        Use ``X^T X / n``; otherwise center and use the unbiased estimator.

    Attributes
    ----------
    graph_ : GraphEstimate
    edges_ : list of (int, int)
        0-based edges with ``i < j``.
    adjacency_ : ndarray of shape (n_features, n_features)
    theta_diag_ : ndarray of shape (n_features,)
        Estimated diagonal of the precision matrix.
    """

    def __init__(self, max_degree=1, kappa=0.5, assume_centered=True):
        self.max_degree = max_degree
        self.kappa = kappa
        self.assume_centered = assume_centered

    def _recover(self, S):
        graph, state = dice(S, self.max_degree, self.kappa, return_state=True)
        self.theta_diag_ = state.theta_ii_hat
        self.passed_sets_ = dict(state.passed_sets)
        return graph


class SliceGraph(_GraphEstimatorMixin, BaseEstimator):
    """Structure recovery via cardinality-constrained regression and a
    product-and-threshold edge rule.

    Parameters
    ----------
    max_degree : int
    kappa : float
    strategy : {"exhaustive", "bnb"}, default="exhaustive"
        Subset search strategy for the constrained regressions.
    assume_centered : bool, default=True

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_features)
        Row ``i`` holds the regression coefficients of vertex ``i``, zero off
        its support.
    """

    def __init__(self, max_degree=1, kappa=0.5, strategy="exhaustive", assume_centered=True):
        self.max_degree = max_degree
        self.kappa = kappa
        self.strategy = strategy
        self.assume_centered = assume_centered

    def _recover(self, S):
        graph, coeffs = _slice(
            S, self.max_degree, self.kappa, strategy=Strategy(self.strategy), return_coefficients=True
        )
        self.coef_ = np.array(coeffs.beta_full)
        self.supports_ = {i: sol.support for i, sol in coeffs.solutions.items()}
        return graph

"""DICE: degree-constrained neighborhood recovery in three phases.

1. Conditional variances ``1 / theta_hat_ii`` from the best size-``d`` regression.
2. Support testing: the first candidate ``B1`` (lexicographic) such that no
   disjoint adversary ``B2`` shows an estimated strength ``>= kappa / 2``.
3. Elimination: regress on the passing set plus one fixed adversary and keep
   the members whose estimated strength exceeds ``kappa / 2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .exceptions import NoPassingSet, SingularSubmatrix
from .graph import GraphEstimate, symmetrize_and
from .regression import (
    SINGULAR_RTOL,
    Strategy,
    SubsetTable,
    _combinations_array,
    l0_least_squares,
    subset_regression,
)
from .sampling import CovarianceEstimate, SampleSet, empirical_covariance

logger = logging.getLogger(__name__)

# rows of (B1, B2) regressions evaluated per batch in phase 2
PHASE2_BATCH_ROWS = 100_000


@dataclass(frozen=True)
class DiceState:
    theta_ii_hat: np.ndarray
    passed_sets: Dict[int, Tuple[int, ...]]
    kappa_hat: Dict[Tuple[int, int], float] = field(default_factory=dict)


def as_covariance(data) -> np.ndarray:
    """Accept a SampleSet, a CovarianceEstimate or a square covariance array."""
    if isinstance(data, SampleSet):
        return empirical_covariance(data).sigma_hat
    if isinstance(data, CovarianceEstimate):
        return data.sigma_hat
    S = np.asarray(data, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square covariance matrix, got shape {S.shape}")
    return S


def phase1_conditional_variances(sigma_hat, d: int, strategy=Strategy.EXHAUSTIVE) -> np.ndarray:
    """Estimate ``theta_ii`` for every vertex as the reciprocal of the smallest
    size-``d`` conditional variance."""
    S = as_covariance(sigma_hat)
    p = S.shape[0]
    table = SubsetTable(S, d) if Strategy(strategy) is Strategy.EXHAUSTIVE and SubsetTable.fits(p, d) else None
    out = np.empty(p)
    for i in range(p):
        sol = l0_least_squares(S, i, d, strategy=strategy, table=table)
        if not sol.loss > 0:
            raise SingularSubmatrix(f"vertex {i} has zero residual variance on {sol.support}")
        out[i] = 1.0 / sol.loss
    return out


def estimate_kappa_hat(sigma_hat, theta_ii_hat, i: int, B1, B2) -> Dict[int, float]:
    """Estimated strengths ``|beta_ij| sqrt(theta_ii / theta_jj)`` for
    ``j`` in ``B1 | B2`` from one regression on the union."""
    S = as_covariance(sigma_hat)
    union = tuple(B1) + tuple(B2)
    reg = subset_regression(S, i, union)
    th = np.asarray(theta_ii_hat, dtype=float)
    return {
        j: float(abs(b) * np.sqrt(th[i] / th[j])) for j, b in zip(union, reg.beta)
    }


def _adversary_size(p: int, d: int) -> int:
    # vertices outside {i} and B1 may number fewer than d on tiny graphs
    return max(0, min(d, p - 1 - d))


def phase2_support_testing(sigma_hat, theta_ii_hat, i: int, d: int, kappa: float) -> Tuple[int, ...]:
    """First candidate neighborhood (lexicographic) passing every adversary.

    Raises
    ------
    NoPassingSet
        If no size-``d`` candidate passes.
    """
    S = as_covariance(sigma_hat)
    th = np.asarray(theta_ii_hat, dtype=float)
    p = S.shape[0]
    others = np.array([j for j in range(p) if j != i], dtype=np.intp)
    b1_all = _combinations_array(others, d)
    a = _adversary_size(p, d)
    if a == 0:
        return tuple(int(v) for v in b1_all[0])

    pos = _combinations_array(range(len(others) - d), a)
    n_adv = pos.shape[0]
    per_batch = max(1, PHASE2_BATCH_ROWS // n_adv)
    half = kappa / 2.0
    for start in range(0, b1_all.shape[0], per_batch):
        b1 = b1_all[start : start + per_batch]
        nb = b1.shape[0]
        # remaining[r] = others minus b1[r], ascending
        mask = np.ones((nb, len(others)), dtype=bool)
        mask[np.arange(nb)[:, None], np.searchsorted(others, b1)] = False
        remaining = np.broadcast_to(others, mask.shape)[mask].reshape(nb, -1)
        b2 = remaining[:, pos]  # (nb, n_adv, a)
        union = np.concatenate([np.broadcast_to(b1[:, None, :], (nb, n_adv, d)), b2], axis=2)
        union = union.reshape(nb * n_adv, d + a)

        blocks = S[union[:, :, None], union[:, None, :]]
        w = np.linalg.eigvalsh(blocks)
        if not np.all((w[:, -1] > 0) & (w[:, 0] > SINGULAR_RTOL * w[:, -1])):
            raise SingularSubmatrix(f"singular covariance block while testing vertex {i}")
        rhs = S[union, i]
        beta = -np.linalg.solve(blocks, rhs[:, :, None])[:, :, 0]
        adv = union[:, d:]
        khat = np.abs(beta[:, d:]) * np.sqrt(th[i] / th[adv])
        passed = (khat.max(axis=1) < half).reshape(nb, n_adv).all(axis=1)
        hits = np.flatnonzero(passed)
        if hits.size:
            return tuple(int(v) for v in b1[hits[0]])
    raise NoPassingSet(i)


def phase3_eliminate(sigma_hat, theta_ii_hat, i: int, passed_set, d: int, kappa: float):
    """Drop members of the passing set whose estimated strength is not above
    ``kappa / 2``. Returns ``(kept_neighbors, kappa_hat_by_member)``."""
    S = as_covariance(sigma_hat)
    p = S.shape[0]
    taken = set(passed_set) | {i}
    a = _adversary_size(p, d)
    b2 = [j for j in range(p) if j not in taken][:a]
    est = estimate_kappa_hat(S, theta_ii_hat, i, tuple(passed_set), tuple(b2))
    strengths = {j: est[j] for j in passed_set}
    kept = tuple(sorted(j for j, v in strengths.items() if v > kappa / 2.0))
    return kept, strengths


def dice(data, d: int, kappa: float, return_state: bool = False):
    """Run all three DICE phases and symmetrize with the AND rule.

    Vertices without a passing candidate get an empty neighborhood and are
    listed in ``GraphEstimate.no_passing_set``.
    """
    S = as_covariance(data)
    p = S.shape[0]
    if not 1 <= d <= p - 1:
        raise ValueError(f"need 1 <= d <= p - 1, got d={d}, p={p}")
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")

    theta = phase1_conditional_variances(S, d)
    passed, failed = {}, []
    for i in range(p):
        try:
            passed[i] = phase2_support_testing(S, theta, i, d, kappa)
        except NoPassingSet:
            logger.info("vertex %d: no candidate neighborhood passed", i)
            failed.append(i)

    neighborhoods = {i: () for i in range(p)}
    kappa_hat = {}
    for i, cand in passed.items():
        kept, strengths = phase3_eliminate(S, theta, i, cand, d, kappa)
        neighborhoods[i] = kept
        kappa_hat.update({(i, j): v for j, v in strengths.items()})

    edges, one_sided = symmetrize_and(neighborhoods)
    graph = GraphEstimate(
        p=p,
        edges=edges,
        neighborhoods=neighborhoods,
        kappa_hat=kappa_hat,
        no_passing_set=tuple(failed),
        asymmetric_pairs=tuple(one_sided),
    )
    if return_state:
        return graph, DiceState(theta_ii_hat=theta, passed_sets=passed, kappa_hat=kappa_hat)
    return graph

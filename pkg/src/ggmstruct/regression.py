"""Subset-restricted least squares and cardinality-constrained regression.

Regressing ``x_i`` on the variables in ``A`` with the convention
``x_i + sum_j beta_j x_j`` gives ``beta = -S_AA^{-1} S_Ai`` and the residual
energy ``S_ii - S_iA S_AA^{-1} S_Ai``, i.e. the (empirical) conditional variance
``Var(x_i | x_A)``. The cardinality-constrained problem picks the size-``d``
subset ``A`` minimizing that conditional variance.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import comb

from .exceptions import BoundsTooTight, SingularSubmatrix

LOSS_RTOL = 1e-12
SINGULAR_RTOL = 1e-12
TABLE_MAX_SUBSETS = 2_000_000
BOUNDS_CHECK_SAMPLES = 64


class Strategy(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    BRANCH_AND_BOUND = "bnb"


@dataclass(frozen=True)
class SubsetRegression:
    i: int
    A: Tuple[int, ...]
    beta: np.ndarray
    loss: float


@dataclass(frozen=True)
class L0Solution:
    i: int
    support: Tuple[int, ...]
    beta: np.ndarray
    loss: float
    strategy_used: Strategy


def _is_singular(block: np.ndarray) -> bool:
    w = np.linalg.eigvalsh(block)
    return not (w[-1] > 0 and w[0] > SINGULAR_RTOL * w[-1])


def subset_regression(sigma_hat: np.ndarray, i: int, A: Sequence[int]) -> SubsetRegression:
    """Least-squares regression of vertex ``i`` on the vertices in ``A``.

    Parameters
    ----------
    sigma_hat : ndarray of shape (p, p)
        Covariance (empirical or exact).
    i : int
        Target vertex.
    A : sequence of int
        Conditioning vertices, ``i`` excluded. Coefficients follow this order.

    Returns
    -------
    SubsetRegression
        ``beta = -S_AA^{-1} S_Ai`` and ``loss = S_ii - S_iA S_AA^{-1} S_Ai``.

    Raises
    ------
    SingularSubmatrix
        If ``S_AA`` is numerically rank deficient.
    """
    A = tuple(int(a) for a in A)
    if i in A:
        raise ValueError(f"target vertex {i} must not be in the conditioning set")
    S = np.asarray(sigma_hat, dtype=float)
    s_ii = float(S[i, i])
    if not A:
        return SubsetRegression(i=i, A=A, beta=np.zeros(0), loss=s_ii)
    idx = list(A)
    s_aa = S[np.ix_(idx, idx)]
    if _is_singular(s_aa):
        raise SingularSubmatrix(f"covariance block on {A} is singular")
    s_ai = S[idx, i]
    beta = -scipy.linalg.solve(s_aa, s_ai, assume_a="sym")
    loss = s_ii + float(s_ai @ beta)
    return SubsetRegression(i=i, A=A, beta=beta, loss=loss)


# ---------------------------------------------------------------------------
# Batched evaluation
# ---------------------------------------------------------------------------


def _combinations_array(items: Sequence[int], d: int) -> np.ndarray:
    """All size-``d`` combinations of ``items`` in lexicographic order, as rows."""
    count = int(comb(len(items), d, exact=True))
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(items, d)),
        dtype=np.intp,
        count=count * d,
    )
    return flat.reshape(count, d)


def _inverse_blocks(S: np.ndarray, combos: np.ndarray):
    """Inverses of ``S[A, A]`` for every row ``A`` of ``combos``; NaN where singular."""
    blocks = S[combos[:, :, None], combos[:, None, :]]
    w = np.linalg.eigvalsh(blocks)
    ok = (w[:, -1] > 0) & (w[:, 0] > SINGULAR_RTOL * w[:, -1])
    inv = np.full(blocks.shape, np.nan)
    if ok.any():
        inv[ok] = np.linalg.inv(blocks[ok])
    return inv


def _quad_losses(S: np.ndarray, i: int, combos: np.ndarray, inv: np.ndarray) -> np.ndarray:
    # fixed-order elementwise accumulation keeps each row's value independent of the batch
    c = S[i][combos]
    d = combos.shape[1]
    q = np.zeros(combos.shape[0])
    for k in range(d):
        for l in range(d):
            q += c[:, k] * inv[:, k, l] * c[:, l]
    return S[i, i] - q


def subset_losses(sigma_hat: np.ndarray, i: int, subsets) -> np.ndarray:
    """Conditional variances of vertex ``i`` for each row of ``subsets``.

    Singular subsets get NaN.
    """
    S = np.asarray(sigma_hat, dtype=float)
    combos = np.atleast_2d(np.asarray(subsets, dtype=np.intp))
    return _quad_losses(S, i, combos, _inverse_blocks(S, combos))


class SubsetTable:
    """Inverted size-``d`` covariance blocks shared by every target vertex.

    The block ``S[A, A]`` does not depend on the regression target, so one
    table serves the exhaustive search of all ``p`` vertices.
    """

    def __init__(self, sigma_hat: np.ndarray, d: int):
        self.S = np.asarray(sigma_hat, dtype=float)
        self.d = d
        p = self.S.shape[0]
        self.combos = _combinations_array(range(p), d)
        self.inv = _inverse_blocks(self.S, self.combos)

    @staticmethod
    def fits(p: int, d: int) -> bool:
        return comb(p, d, exact=True) <= TABLE_MAX_SUBSETS

    def losses(self, i: int):
        keep = ~(self.combos == i).any(axis=1)
        combos = self.combos[keep]
        return combos, _quad_losses(self.S, i, combos, self.inv[keep])


def _tie_tol(loss: float) -> float:
    return LOSS_RTOL * max(1.0, abs(loss))


def _pick(combos: np.ndarray, losses: np.ndarray, i: int) -> Tuple[int, ...]:
    finite = np.isfinite(losses)
    if not finite.any():
        raise SingularSubmatrix(f"every candidate subset for vertex {i} is singular")
    best = losses[finite].min()
    hit = np.flatnonzero(finite & (losses <= best + _tie_tol(best)))[0]
    return tuple(int(v) for v in combos[hit])


def _exhaustive_support(S, i, d, table: Optional[SubsetTable] = None) -> Tuple[int, ...]:
    p = S.shape[0]
    if table is not None and table.d == d:
        combos, losses = table.losses(i)
        return _pick(combos, losses, i)
    others = [j for j in range(p) if j != i]
    if comb(len(others), d, exact=True) <= TABLE_MAX_SUBSETS:
        combos = _combinations_array(others, d)
        return _pick(combos, subset_losses(S, i, combos), i)
    # chunked scan for very large searches; keeps the same tie rule
    best_loss, best_sub = math.inf, None
    stream = itertools.combinations(others, d)
    while True:
        chunk = list(itertools.islice(stream, TABLE_MAX_SUBSETS))
        if not chunk:
            break
        combos = np.asarray(chunk, dtype=np.intp)
        losses = subset_losses(S, i, combos)
        finite = np.isfinite(losses)
        if not finite.any():
            continue
        m = losses[finite].min()
        if best_sub is None or m < best_loss - _tie_tol(best_loss):
            best_loss, best_sub = m, _pick(combos, losses, i)
        elif m < best_loss:
            best_loss = m
    if best_sub is None:
        raise SingularSubmatrix(f"every candidate subset for vertex {i} is singular")
    return best_sub


def l0_least_squares(
    sigma_hat: np.ndarray,
    i: int,
    d: int,
    strategy=Strategy.EXHAUSTIVE,
    table: Optional[SubsetTable] = None,
    bounds: Optional[Tuple[float, float]] = None,
) -> L0Solution:
    """Best size-``d`` regression subset for vertex ``i``.

    Ties (losses within a relative ``1e-12``) go to the lexicographically
    smallest subset, so both strategies return the same answer.
    """
    S = np.asarray(sigma_hat, dtype=float)
    p = S.shape[0]
    if not 1 <= d <= p - 1:
        raise ValueError(f"need 1 <= d <= p - 1, got d={d}, p={p}")
    strategy = Strategy(strategy)
    if strategy is Strategy.BRANCH_AND_BOUND:
        return branch_and_bound_l0(S, i, d, bounds=bounds)
    support = _exhaustive_support(S, i, d, table)
    reg = subset_regression(S, i, support)
    return L0Solution(i=i, support=support, beta=reg.beta, loss=reg.loss, strategy_used=strategy)


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


def default_bounds(sigma_hat: np.ndarray, i: int) -> Tuple[float, float]:
    S = np.asarray(sigma_hat, dtype=float)
    diag = np.diag(S)
    others = np.delete(diag, i)
    u = 10.0 * float(np.sqrt(others.max() / diag[i]))
    return -u, u


def _relaxation_lower_bound(Q, c, s_ii, inc, free, r, lo, hi, target, max_iter=60):
    """Certified lower bound on the continuous relaxation of the mixed-integer
    program restricted to one branch.

    Variables ``inc`` are forced into the support (``lo <= beta <= hi``), ``r``
    of the ``free`` variables may still enter (``s*lo <= beta <= s*hi`` with
    ``s in [0, 1]``, ``sum s = r``). Frank-Wolfe iterates give the bound
    ``f(x) + min_v grad(x).(v - x)``, valid at every step by convexity.
    """
    idx = np.asarray(list(inc) + list(free), dtype=np.intp)
    k = len(inc)
    Qs = Q[np.ix_(idx, idx)]
    cs = c[idx]
    x = np.zeros(len(idx))
    grad = 2.0 * cs
    fx = s_ii
    best = -math.inf
    for _ in range(max_iter):
        v = np.zeros_like(x)
        g_in = grad[:k]
        v[:k] = np.where(g_in < 0, hi, lo)
        if r > 0:
            g_free = grad[k:]
            gain = np.minimum(g_free * hi, g_free * lo)
            pick = np.argsort(gain, kind="stable")[:r]
            pick = pick[gain[pick] < 0]
            v[k + pick] = np.where(g_free[pick] < 0, hi, lo)
        direction = v - x
        slope = float(grad @ direction)
        best = max(best, fx + slope)
        if best > target or slope > -1e-14 * max(1.0, abs(fx)):
            break
        curv = float(direction @ Qs @ direction)
        gamma = 1.0 if curv <= 0 else min(1.0, -slope / (2.0 * curv))
        x = x + gamma * direction
        fx = fx + gamma * slope + gamma * gamma * curv
        grad = 2.0 * (Qs @ x) + 2.0 * cs
    return best


def _schur_lower_bound(Q, c, s_ii, idx):
    # conditioning on a superset never increases the residual variance
    if not idx:
        return s_ii
    block = Q[np.ix_(idx, idx)]
    if _is_singular(block):
        return 0.0
    rhs = c[idx]
    return max(0.0, s_ii - float(rhs @ scipy.linalg.solve(block, rhs, assume_a="sym")))


def _greedy_subset(S, i, others, d):
    chosen = []
    for _ in range(d):
        best, best_j = math.inf, None
        for j in others:
            if j in chosen:
                continue
            try:
                loss = subset_regression(S, i, chosen + [j]).loss
            except SingularSubmatrix:
                continue
            if loss < best:
                best, best_j = loss, j
        if best_j is None:
            return None
        chosen.append(best_j)
    return tuple(sorted(chosen))


def branch_and_bound_l0(
    sigma_hat: np.ndarray,
    i: int,
    d: int,
    bounds: Optional[Tuple[float, float]] = None,
    check_samples: int = BOUNDS_CHECK_SAMPLES,
) -> L0Solution:
    """Depth-first branch and bound over support indicators.

    Branching fixes indicators in ascending vertex order, include-branch
    first, so leaves are visited in lexicographic order. A node is pruned when
    its lower bound (the larger of the unconstrained conditional variance on
    all still-admissible vertices and the certified relaxation bound) exceeds
    the incumbent by more than the tie tolerance.

    Raises
    ------
    BoundsTooTight
        If the coefficient box excludes the reported optimum or a random
        audit of subsets finds a strictly better one.
    """
    S = np.asarray(sigma_hat, dtype=float)
    p = S.shape[0]
    if not 1 <= d <= p - 1:
        raise ValueError(f"need 1 <= d <= p - 1, got d={d}, p={p}")
    lo, hi = default_bounds(S, i) if bounds is None else bounds
    if not (lo < 0 < hi and math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"bounds must satisfy L < 0 < U and be finite, got ({lo}, {hi})")

    others = [j for j in range(p) if j != i]
    m = len(others)
    Q = S[np.ix_(others, others)]
    c = S[i, others]
    s_ii = float(S[i, i])
    pos_of = {v: k for k, v in enumerate(others)}

    leaves = {}

    def leaf(positions):
        sub = tuple(others[k] for k in positions)
        if sub not in leaves:
            leaves[sub] = float(subset_losses(S, i, [sub])[0])
        return leaves[sub]

    incumbent = math.inf
    greedy = _greedy_subset(S, i, others, d)
    if greedy is not None:
        val = leaf([pos_of[v] for v in greedy])
        if math.isfinite(val):
            incumbent = val

    stack = [((), 0)]
    while stack:
        inc, k = stack.pop()
        r = d - len(inc)
        if r == 0:
            val = leaf(inc)
            if math.isfinite(val) and val < incumbent:
                incumbent = val
            continue
        n_free = m - k
        if n_free < r:
            continue
        if n_free == r:
            val = leaf(inc + tuple(range(k, m)))
            if math.isfinite(val) and val < incumbent:
                incumbent = val
            continue
        target = incumbent + _tie_tol(incumbent) if math.isfinite(incumbent) else math.inf
        if math.isfinite(target):
            free = tuple(range(k, m))
            bound = _schur_lower_bound(Q, c, s_ii, list(inc) + list(free))
            if bound <= target:
                bound = max(bound, _relaxation_lower_bound(Q, c, s_ii, inc, free, r, lo, hi, target))
            if bound > target:
                continue
        stack.append((inc, k + 1))
        stack.append((inc + (k,), k + 1))

    subs = [s for s, v in leaves.items() if math.isfinite(v)]
    if not subs:
        raise SingularSubmatrix(f"every candidate subset for vertex {i} is singular")
    best = min(leaves[s] for s in subs)
    support = min(s for s in subs if leaves[s] <= best + _tie_tol(best))
    reg = subset_regression(S, i, support)

    if np.any(reg.beta < lo) or np.any(reg.beta > hi):
        raise BoundsTooTight(
            f"optimal coefficients for vertex {i} leave the box [{lo:.4g}, {hi:.4g}]"
        )
    _audit_bounds(S, i, others, d, best, check_samples)
    return L0Solution(
        i=i, support=support, beta=reg.beta, loss=reg.loss, strategy_used=Strategy.BRANCH_AND_BOUND
    )


def _audit_bounds(S, i, others, d, best, samples):
    if samples <= 0:
        return
    total = comb(len(others), d, exact=True)
    rng = np.random.default_rng(i)
    if total <= samples:
        combos = _combinations_array(others, d)
    else:
        combos = np.sort(
            np.stack([rng.choice(others, size=d, replace=False) for _ in range(samples)]), axis=1
        )
    losses = subset_losses(S, i, combos)
    if np.any(np.isfinite(losses) & (losses < best - _tie_tol(best))):
        raise BoundsTooTight(f"audit found a subset beating the certified optimum for vertex {i}")

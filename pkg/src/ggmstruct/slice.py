"""SLICE: cardinality-constrained regression per vertex, then product-and-threshold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .dice import as_covariance
from .graph import GraphEstimate
from .regression import L0Solution, Strategy, SubsetTable, l0_least_squares


@dataclass(frozen=True)
class SliceCoefficients:
    solutions: Dict[int, L0Solution]
    beta_full: np.ndarray

    @property
    def p(self) -> int:
        return self.beta_full.shape[0]


def slice_phase1(sigma_hat, d: int, strategy=Strategy.EXHAUSTIVE) -> SliceCoefficients:
    """Best size-``d`` regression for every vertex; coefficients off the
    support are exactly zero in ``beta_full``."""
    S = as_covariance(sigma_hat)
    p = S.shape[0]
    strategy = Strategy(strategy)
    table = SubsetTable(S, d) if strategy is Strategy.EXHAUSTIVE and SubsetTable.fits(p, d) else None
    beta = np.zeros((p, p))
    sols = {}
    for i in range(p):
        sol = l0_least_squares(S, i, d, strategy=strategy, table=table)
        sols[i] = sol
        beta[i, list(sol.support)] = sol.beta
    beta.setflags(write=False)
    return SliceCoefficients(solutions=sols, beta_full=beta)


def slice_phase2(coeffs: SliceCoefficients, kappa: float) -> GraphEstimate:
    """Declare ``(i, j)`` an edge iff ``sqrt(|beta_ij * beta_ji|) > kappa / 2``."""
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    B = coeffs.beta_full
    p = B.shape[0]
    strength = np.sqrt(np.abs(B * B.T))
    in_support = (B != 0) | (B.T != 0)
    kappa_hat = {}
    edges = set()
    for i in range(p):
        for j in range(i + 1, p):
            if in_support[i, j]:
                kappa_hat[(i, j)] = float(strength[i, j])
            if strength[i, j] > kappa / 2.0:
                edges.add((i, j))
    neigh = {i: [] for i in range(p)}
    for i, j in sorted(edges):
        neigh[i].append(j)
        neigh[j].append(i)
    return GraphEstimate(
        p=p,
        edges=frozenset(edges),
        neighborhoods={i: tuple(sorted(v)) for i, v in neigh.items()},
        kappa_hat=kappa_hat,
    )


def slice(data, d: int, kappa: float, strategy=Strategy.EXHAUSTIVE, return_coefficients: bool = False):
    """Run both SLICE phases on samples or a covariance matrix."""
    coeffs = slice_phase1(data, d, strategy=strategy)
    graph = slice_phase2(coeffs, kappa)
    if return_coefficients:
        return graph, coeffs
    return graph


def link_strength(coeffs: SliceCoefficients, i: int, j: int) -> float:
    """Symmetric strength estimate ``sqrt(|beta_ij * beta_ji|)``."""
    B = coeffs.beta_full
    return float(np.sqrt(abs(B[i, j] * B[j, i])))

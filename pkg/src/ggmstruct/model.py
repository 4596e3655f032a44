"""Ground-truth Gaussian graphical models and their structural quantities.

Vertices are 0-based everywhere in this module. File formats and the CLI
shift to 1-based indices at the boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, FrozenSet, Optional, Tuple, Union

import networkx as nx
import numpy as np

from .exceptions import EmptyGraph, InvalidSpec, NotPositiveDefinite, SingularConditioningSet

PD_RELATIVE_TOL = 1e-12
RETRY_SHRINK = 0.9
MAX_PD_RETRIES = 20

Edge = Tuple[int, int]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def is_positive_definite(matrix: np.ndarray, rtol: float = PD_RELATIVE_TOL) -> bool:
    """Return True when every eigenvalue exceeds ``rtol`` times the largest one."""
    eigvals = np.linalg.eigvalsh(matrix)
    top = eigvals[-1]
    return bool(top > 0 and eigvals[0] > rtol * top)


def edges_from_precision(theta: np.ndarray) -> FrozenSet[Edge]:
    """Unordered vertex pairs ``(i, j)``, ``i < j``, with a nonzero precision entry."""
    rows, cols = np.nonzero(np.triu(theta, k=1))
    return frozenset(zip(rows.tolist(), cols.tolist()))


def max_degree(edges, p: int) -> int:
    deg = np.zeros(p, dtype=int)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    return int(deg.max()) if p else 0


def normalized_strength(theta: np.ndarray, i: int, j: int) -> float:
    """Normalized edge strength ``|theta_ij| / sqrt(theta_ii * theta_jj)``.

    Invariant under ``theta -> D theta D`` for any positive diagonal ``D``.
    """
    if i == j:
        raise ValueError("normalized_strength needs two distinct vertices")
    theta = np.asarray(theta, dtype=float)
    return float(abs(theta[i, j]) / math.sqrt(theta[i, i] * theta[j, j]))


def min_strength(theta: np.ndarray, edges) -> float:
    if not edges:
        raise EmptyGraph("graph has no edges, minimum strength undefined")
    return min(normalized_strength(theta, i, j) for i, j in edges)


@dataclass(frozen=True)
class GgmInstance:
    """A zero-mean (by default) Gaussian graphical model with known precision.

    Attributes
    ----------
    theta : ndarray of shape (p, p)
        Precision matrix.
    sigma : ndarray of shape (p, p)
        Covariance matrix, the inverse of ``theta``.
    edges : frozenset of (int, int)
        True edge set, pairs with ``i < j``.
    p, d : int
        Vertex count and maximum degree.
    kappa : float
        Minimum normalized edge strength over ``edges`` (0 for an empty graph).
    mu : ndarray of shape (p,)
        Mean vector.
    """

    theta: np.ndarray
    sigma: np.ndarray
    edges: FrozenSet[Edge]
    p: int
    d: int
    kappa: float
    mu: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    @classmethod
    def from_precision(cls, theta, mu=None, family="custom", params=None, seed=None, d=None):
        """Validate ``theta`` and derive covariance, edges, degree and kappa."""
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise InvalidSpec(f"precision matrix must be square, got shape {theta.shape}")
        if not np.allclose(theta, theta.T, rtol=0, atol=1e-10):
            raise InvalidSpec("precision matrix is not symmetric")
        theta = 0.5 * (theta + theta.T)
        if not is_positive_definite(theta):
            raise NotPositiveDefinite("precision matrix is not positive definite")
        p = theta.shape[0]
        sigma = np.linalg.inv(theta)
        sigma = 0.5 * (sigma + sigma.T)
        edges = edges_from_precision(theta)
        deg = max_degree(edges, p)
        if d is None:
            d = deg
        elif deg > d:
            raise InvalidSpec(f"graph has a vertex of degree {deg} > d={d}")
        kappa = min_strength(theta, edges) if edges else 0.0
        mu = np.zeros(p) if mu is None else np.asarray(mu, dtype=float)
        if mu.shape != (p,):
            raise InvalidSpec(f"mean vector must have length {p}")
        return cls(
            theta=_freeze(theta),
            sigma=_freeze(sigma),
            edges=edges,
            p=p,
            d=int(d),
            kappa=float(kappa),
            mu=_freeze(mu),
            family=family,
            params=dict(params or {}),
            seed=seed,
        )

    def neighborhood(self, i: int) -> FrozenSet[int]:
        return frozenset(b if a == i else a for a, b in self.edges if i in (a, b))

    def with_mean(self, mu) -> "GgmInstance":
        return GgmInstance.from_precision(
            self.theta, mu=mu, family=self.family, params=self.params, seed=self.seed, d=self.d
        )

    # --- JSON model file (1-based indices are not needed: full matrices only) ---

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "theta": self.theta.tolist(),
            "mu": self.mu.tolist(),
            "family": self.family,
            "params": self.params,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GgmInstance":
        try:
            theta = obj["theta"]
        except KeyError as exc:
            raise InvalidSpec("model file lacks 'theta'") from exc
        inst = cls.from_precision(
            theta,
            mu=obj.get("mu"),
            family=obj.get("family", "custom"),
            params=obj.get("params") or {},
            seed=obj.get("seed"),
            d=obj.get("d"),
        )
        if "p" in obj and obj["p"] != inst.p:
            raise InvalidSpec(f"model file declares p={obj['p']} but theta is {inst.p}x{inst.p}")
        return inst


def save_model(instance: GgmInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance.to_json_dict(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> GgmInstance:
    with open(path) as fh:
        return GgmInstance.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Model families
# ---------------------------------------------------------------------------


def _check_weak_strong(kappa, epsilon):
    if not 0 < epsilon < 1:
        raise InvalidSpec(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < kappa < 1 - epsilon:
        raise InvalidSpec(f"kappa must lie in (0, 1 - epsilon) = (0, {1 - epsilon}), got {kappa}")


@dataclass(frozen=True)
class TriangleCloud:
    """A triangle with two weak links and one strong link plus ``p - 3``
    independent vertices of variance ``sigma2``."""

    kappa: float
    epsilon: float
    sigma2: float
    p: int

    name = "triangle-cloud"

    def validate(self):
        _check_weak_strong(self.kappa, self.epsilon)
        if not self.sigma2 > 0:
            raise InvalidSpec(f"sigma2 must be positive, got {self.sigma2}")
        if self.p < 3:
            raise InvalidSpec(f"triangle-cloud needs p >= 3, got {self.p}")


@dataclass(frozen=True)
class ThreeNode:
    """The 3-vertex triangle whose condition number grows as epsilon -> 0."""

    kappa0: float
    epsilon: float

    name = "three-node"

    def validate(self):
        _check_weak_strong(self.kappa0, self.epsilon)


@dataclass(frozen=True)
class FourNode:
    """The 3-vertex triangle plus one isolated unit-variance vertex."""

    kappa: float
    epsilon: float

    name = "four-node"

    def validate(self):
        _check_weak_strong(self.kappa, self.epsilon)


@dataclass(frozen=True)
class RegularRandom:
    """Random ``d``-regular graph with unit diagonal and random-sign links of
    magnitude drawn uniformly in ``[kappa_min, kappa_max]``."""

    p: int
    d: int
    kappa_min: float
    kappa_max: float
    seed: Optional[int] = None

    name = "regular-random"

    def validate(self):
        if self.d < 1 or self.p <= self.d:
            raise InvalidSpec(f"need 1 <= d < p, got p={self.p}, d={self.d}")
        if (self.d * self.p) % 2:
            raise InvalidSpec(f"no {self.d}-regular graph on {self.p} vertices (d*p odd)")
        if not 0 < self.kappa_min <= self.kappa_max < 1:
            raise InvalidSpec(
                f"need 0 < kappa_min <= kappa_max < 1, got [{self.kappa_min}, {self.kappa_max}]"
            )


ModelFamilySpec = Union[TriangleCloud, ThreeNode, FourNode, RegularRandom]


def _triangle_block(kappa, epsilon):
    return np.array(
        [
            [1.0, kappa, kappa],
            [kappa, 1.0, 1.0 - epsilon],
            [kappa, 1.0 - epsilon, 1.0],
        ]
    )


def _spec_params(spec) -> dict:
    params = asdict(spec)
    params.pop("seed", None)
    return params


def build_instance(spec: ModelFamilySpec) -> GgmInstance:
    """Assemble the precision matrix of a model family.

    Raises
    ------
    InvalidSpec
        If the family parameters violate their constraints.
    NotPositiveDefinite
        If a random instance stays indefinite after the shrink-and-retry policy.
    """
    if not isinstance(spec, (TriangleCloud, ThreeNode, FourNode, RegularRandom)):
        raise InvalidSpec(f"unknown model family {spec!r}")
    spec.validate()

    if isinstance(spec, ThreeNode):
        theta = _triangle_block(spec.kappa0, spec.epsilon)
        return GgmInstance.from_precision(theta, family=spec.name, params=_spec_params(spec), d=2)

    if isinstance(spec, FourNode):
        theta = np.zeros((4, 4))
        theta[:3, :3] = _triangle_block(spec.kappa, spec.epsilon)
        theta[3, 3] = 1.0
        return GgmInstance.from_precision(theta, family=spec.name, params=_spec_params(spec), d=2)

    if isinstance(spec, TriangleCloud):
        theta = np.zeros((spec.p, spec.p))
        theta[:3, :3] = _triangle_block(spec.kappa, spec.epsilon)
        idx = np.arange(3, spec.p)
        theta[idx, idx] = 1.0 / spec.sigma2
        return GgmInstance.from_precision(theta, family=spec.name, params=_spec_params(spec), d=2)

    return _build_regular_random(spec)


def _build_regular_random(spec: RegularRandom) -> GgmInstance:
    graph = nx.random_regular_graph(spec.d, spec.p, seed=spec.seed)
    pairs = sorted(tuple(sorted(e)) for e in graph.edges())
    rng = np.random.default_rng(spec.seed)
    magnitudes = rng.uniform(spec.kappa_min, spec.kappa_max, size=len(pairs))
    signs = rng.choice([-1.0, 1.0], size=len(pairs))

    off = np.zeros((spec.p, spec.p))
    for (i, j), m, s in zip(pairs, magnitudes, signs):
        off[i, j] = off[j, i] = s * m

    eye = np.eye(spec.p)
    for _ in range(MAX_PD_RETRIES + 1):
        theta = eye + off
        if is_positive_definite(theta):
            return GgmInstance.from_precision(
                theta, family=spec.name, params=_spec_params(spec), seed=spec.seed, d=spec.d
            )
        off = off * RETRY_SHRINK
    raise NotPositiveDefinite(
        f"regular-random instance (p={spec.p}, d={spec.d}, seed={spec.seed}) is not positive "
        f"definite after {MAX_PD_RETRIES} shrink retries"
    )


def spec_from_params(family: str, params: dict) -> ModelFamilySpec:
    """Rebuild a family spec from its name and parameter dictionary."""
    classes = {cls.name: cls for cls in (TriangleCloud, ThreeNode, FourNode, RegularRandom)}
    try:
        cls = classes[family]
    except KeyError as exc:
        raise InvalidSpec(f"unknown model family {family!r}; choose from {sorted(classes)}") from exc
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidSpec(f"bad parameters for {family}: {exc}") from exc


def true_min_kappa(instance: GgmInstance) -> float:
    """Minimum normalized strength over the instance's true edges."""
    return min_strength(instance.theta, instance.edges)


def conditional_correlation(sigma: np.ndarray, i: int, j: int, S) -> float:
    """Partial correlation of ``X_i`` and ``X_j`` given ``X_S``.

    Computed from the Schur complement of ``sigma`` on the conditioning set.
    """
    S = list(S)
    if i == j:
        raise ValueError("conditional_correlation needs two distinct vertices")
    if i in S or j in S:
        raise ValueError("target vertices must not belong to the conditioning set")
    sigma = np.asarray(sigma, dtype=float)
    pair = [i, j]
    block = sigma[np.ix_(pair, pair)]
    if S:
        s_ss = sigma[np.ix_(S, S)]
        if not is_positive_definite(s_ss):
            raise SingularConditioningSet(f"covariance block on {S} is not invertible")
        cross = sigma[np.ix_(pair, S)]
        block = block - cross @ np.linalg.solve(s_ss, cross.T)
    return float(block[0, 1] / math.sqrt(block[0, 0] * block[1, 1]))

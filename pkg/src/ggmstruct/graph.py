"""Recovered graph container and its JSON representation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

import numpy as np


@dataclass(frozen=True)
class GraphEstimate:
    """Edges recovered by DICE or SLICE (0-based vertices).

    ``kappa_hat`` maps a vertex pair to its estimated normalized strength.
    DICE keys are ordered ``(i, j)`` pairs from the elimination step; SLICE
    keys are unordered pairs stored with ``i < j``.
    """

    p: int
    edges: FrozenSet[Tuple[int, int]]
    neighborhoods: Dict[int, Tuple[int, ...]]
    kappa_hat: Dict[Tuple[int, int], float] = field(default_factory=dict)
    no_passing_set: Tuple[int, ...] = ()
    asymmetric_pairs: Tuple[Tuple[int, int], ...] = ()

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "edges": [[i + 1, j + 1] for i, j in sorted(self.edges)],
            "neighborhoods": {
                str(i + 1): [j + 1 for j in sorted(self.neighborhoods.get(i, ()))]
                for i in range(self.p)
            },
            "kappa_hat": {
                f"{i + 1},{j + 1}": float(v) for (i, j), v in sorted(self.kappa_hat.items())
            },
            "diagnostics": {
                "no_passing_set": [i + 1 for i in self.no_passing_set],
                "asymmetric_pairs": [[i + 1, j + 1] for i, j in self.asymmetric_pairs],
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GraphEstimate":
        p = int(obj["p"])
        edges = frozenset((min(i, j) - 1, max(i, j) - 1) for i, j in obj["edges"])
        neigh = {int(k) - 1: tuple(j - 1 for j in v) for k, v in obj.get("neighborhoods", {}).items()}
        kappa_hat = {}
        for key, v in obj.get("kappa_hat", {}).items():
            a, b = (int(t) - 1 for t in key.split(","))
            kappa_hat[(a, b)] = float(v)
        diag = obj.get("diagnostics", {})
        return cls(
            p=p,
            edges=edges,
            neighborhoods=neigh,
            kappa_hat=kappa_hat,
            no_passing_set=tuple(i - 1 for i in diag.get("no_passing_set", [])),
            asymmetric_pairs=tuple((i - 1, j - 1) for i, j in diag.get("asymmetric_pairs", [])),
        )


def write_graph(graph: GraphEstimate, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_json_dict(), fh, indent=1)
        fh.write("\n")


def read_graph(path) -> GraphEstimate:
    with open(path) as fh:
        return GraphEstimate.from_json_dict(json.load(fh))


def symmetrize_and(neighborhoods: Dict[int, Tuple[int, ...]]) -> Tuple[FrozenSet, List]:
    """Keep ``(i, j)`` only when each vertex lists the other; return the
    edge set and the one-sided pairs."""
    edges, one_sided = set(), set()
    for i, nb in neighborhoods.items():
        for j in nb:
            pair = (min(i, j), max(i, j))
            if i in neighborhoods.get(j, ()):
                edges.add(pair)
            else:
                one_sided.add(pair)
    return frozenset(edges), sorted(one_sided)

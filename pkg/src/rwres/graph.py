"""Connected undirected graphs for the walks to move on.

Sampling is delegated to networkx; everything downstream works on the
immutable :class:`Graph` (dense integer node ids, sorted neighbor tuples).
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import ConfigError, ConnectivityError

FAMILIES = ("complete", "random_regular", "erdos_renyi", "power_law")
MAX_RETRIES = 1000


@dataclass(frozen=True)
class GraphSpec:
    family: str = "random_regular"
    n: int = 100
    degree: int = 8
    edge_prob: float = 0.1
    attachment: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown graph family {self.family!r}")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.family == "random_regular":
            if not 1 <= self.degree < self.n:
                raise ConfigError("random_regular requires 1 <= degree < n")
            if (self.n * self.degree) % 2:
                raise ConfigError("random_regular requires n * degree even")
        if self.family == "erdos_renyi" and not 0.0 < self.edge_prob <= 1.0:
            raise ConfigError("edge_prob must lie in (0, 1]")
        if self.family == "power_law" and not 1 <= self.attachment < self.n:
            raise ConfigError("power_law requires 1 <= attachment < n")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GraphSpec":
        return cls(**data)


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def edges(self):
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i < j:
                    yield i, j

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def transition_matrix(self) -> np.ndarray:
        P = np.zeros((self.n, self.n))
        for i, nbrs in enumerate(self.adjacency):
            P[i, list(nbrs)] = 1.0 / len(nbrs)
        return P

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ConfigError(f"self-loop at node {i}")
            nbrs[i].add(j)
            nbrs[j].add(i)
        return cls(n=n, adjacency=tuple(tuple(sorted(s)) for s in nbrs))


def is_connected(g: Graph) -> bool:
    seen = bytearray(g.n)
    seen[0] = 1
    queue = deque([0])
    count = 1
    while queue:
        i = queue.popleft()
        for j in g.adjacency[i]:
            if not seen[j]:
                seen[j] = 1
                count += 1
                queue.append(j)
    return count == g.n


def _derive_seed(seed: int, attempt: int) -> int:
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1, dtype=np.uint32)[0])


def _sample(spec: GraphSpec, seed: int) -> nx.Graph:
    if spec.family == "complete":
        return nx.complete_graph(spec.n)
    if spec.family == "random_regular":
        return nx.random_regular_graph(spec.degree, spec.n, seed=seed)
    if spec.family == "erdos_renyi":
        return nx.gnp_random_graph(spec.n, spec.edge_prob, seed=seed)
    return nx.barabasi_albert_graph(spec.n, spec.attachment, seed=seed)


def generate(spec: GraphSpec) -> Graph:
    """Sample a connected graph for ``spec``, resampling disconnected draws."""
    for attempt in range(MAX_RETRIES):
        nxg = _sample(spec, _derive_seed(spec.seed, attempt))
        g = Graph.from_edges(spec.n, nxg.edges())
        if is_connected(g):
            return g
        if spec.family == "complete":
            break
    raise ConnectivityError(
        f"no connected {spec.family} sample after {MAX_RETRIES} attempts"
    )


def uniform_neighbor(g: Graph, node: int, rng: np.random.Generator) -> int:
    nbrs = g.adjacency[node]
    return nbrs[int(rng.integers(len(nbrs)))]


def write_edge_csv(g: Graph, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        w.writerows(g.edges())
    return path

"""Distance-regular graph families, stratification and Jacobi reduction.

Vertices are integers ``0..N-1``.  Cycle vertices run around the ring,
hypercube vertices are the integers whose binary expansion is the bit
string, and crown vertices are ``u_1..u_m`` followed by ``v_1..v_m``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    InvalidParameterError,
    NotStratifiableError,
    SizeLimitError,
    UnsupportedTopologyError,
)

#: Largest vertex count accepted by the vertex-level builders.
VERTEX_CAP = 2**20


@dataclass(frozen=True, eq=False)
class FullGraph:
    """Vertex-level graph with a sender (``reference``) and receiver (``target``)."""

    n_vertices: int
    adjacency: sparse.csr_matrix
    reference: int
    target: int
    name: str = "custom"

    def __post_init__(self):
        a = self.adjacency
        if a.shape != (self.n_vertices, self.n_vertices):
            raise InvalidParameterError(
                f"adjacency shape {a.shape} does not match n_vertices={self.n_vertices}"
            )
        if a.diagonal().any():
            raise InvalidParameterError("adjacency has self-loops")
        if (a != a.T).nnz:
            raise InvalidParameterError("adjacency is not symmetric")
        for v in (self.reference, self.target):
            if not 0 <= v < self.n_vertices:
                raise InvalidParameterError(f"vertex {v} out of range")

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray().astype(float)


@dataclass(frozen=True)
class Stratification:
    strata: tuple[np.ndarray, ...]

    @property
    def diameter(self) -> int:
        return len(self.strata) - 1

    @property
    def valencies(self) -> np.ndarray:
        return np.array([len(s) for s in self.strata], dtype=int)


@dataclass(frozen=True, eq=False)
class JacobiParams:
    """Tridiagonal data ``alpha_0..alpha_d``, ``beta_1..beta_d`` and valencies.

    ``beta_sq`` is the primary storage so that families with integer
    ``beta**2`` keep it exact; ``beta`` is derived.
    """

    alpha: np.ndarray
    beta_sq: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta_sq = np.asarray(self.beta_sq, dtype=float)
        kappa = np.asarray(self.kappa)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta_sq", beta_sq)
        object.__setattr__(self, "kappa", kappa)
        d = len(alpha) - 1
        if d < 0 or len(beta_sq) != d or len(kappa) != d + 1:
            raise InvalidParameterError(
                "need len(alpha) == len(kappa) == len(beta_sq) + 1"
            )
        if np.any(beta_sq <= 0):
            raise InvalidParameterError("beta must be strictly positive")
        if kappa[0] != 1 or np.any(kappa <= 0):
            raise InvalidParameterError("kappa must be positive with kappa_0 == 1")

    @classmethod
    def from_beta(cls, alpha, beta, kappa) -> "JacobiParams":
        return cls(alpha, np.asarray(beta, dtype=float) ** 2, kappa)

    @property
    def d(self) -> int:
        return len(self.alpha) - 1

    @property
    def beta(self) -> np.ndarray:
        return np.sqrt(self.beta_sq)

    def matrix(self) -> np.ndarray:
        """Dense ``(d+1) x (d+1)`` Jacobi matrix."""
        b = self.beta
        return np.diag(self.alpha) + np.diag(b, 1) + np.diag(b, -1)


@dataclass(eq=False)
class DistanceMatrices:
    """Distance matrices ``A_0..A_d``, computed lazily from all-pairs BFS."""

    graph: FullGraph
    _dist: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def distance(self) -> np.ndarray:
        if self._dist is None:
            dist = csgraph.shortest_path(self.graph.adjacency, unweighted=True)
            if np.isinf(dist).any():
                raise UnsupportedTopologyError("graph is not connected")
            self._dist = dist.astype(int)
        return self._dist

    @property
    def diameter(self) -> int:
        return int(self.distance.max())

    def matrix(self, i: int) -> np.ndarray:
        return (self.distance == i).astype(float)

    @property
    def matrices(self) -> list[np.ndarray]:
        return [self.matrix(i) for i in range(self.diameter + 1)]


def _from_edges(n: int, rows, cols, reference: int, target: int, name: str) -> FullGraph:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    data = np.ones(2 * len(rows), dtype=np.int8)
    adj = sparse.csr_matrix(
        (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    adj.sum_duplicates()
    adj.data[:] = 1
    return FullGraph(n, adj, reference, target, name)


def _check_cap(n: int, max_vertices: int) -> None:
    if n > max_vertices:
        raise SizeLimitError(f"{n} vertices exceeds the cap of {max_vertices}")


def build_cycle(m: int, max_vertices: int = VERTEX_CAP) -> FullGraph:
    """Even cycle ``C_{2m}`` with sender 0 and receiver ``m``."""
    if m < 2:
        raise InvalidParameterError(f"cycle needs m >= 2, got {m}")
    n = 2 * m
    _check_cap(n, max_vertices)
    v = np.arange(n)
    return _from_edges(n, v, (v + 1) % n, 0, m, f"cycle-{m}")


def build_hypercube(d: int, max_vertices: int = VERTEX_CAP) -> FullGraph:
    """Hypercube ``H(d, 2)`` with sender ``0...0`` and receiver ``1...1``."""
    if d < 1:
        raise InvalidParameterError(f"hypercube needs d >= 1, got {d}")
    if d >= 63 or 2**d > max_vertices:
        raise SizeLimitError(f"2**{d} vertices exceeds the cap of {max_vertices}")
    n = 2**d
    v = np.arange(n, dtype=np.int64)
    rows, cols = [], []
    for bit in range(d):
        low = v[(v >> bit) & 1 == 0]
        rows.append(low)
        cols.append(low | (1 << bit))
    return _from_edges(n, np.concatenate(rows), np.concatenate(cols), 0, n - 1, f"hypercube-{d}")


def build_crown(m: int, max_vertices: int = VERTEX_CAP) -> FullGraph:
    """Crown graph on ``2m`` vertices; ``u_i ~ v_j`` iff ``i != j``.

    The receiver is ``v_1``, the only vertex at distance 3 from ``u_1``.
    """
    if m < 3:
        raise InvalidParameterError(f"crown needs m >= 3, got {m}")
    n = 2 * m
    _check_cap(n, max_vertices)
    u, v = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    off = u != v
    return _from_edges(n, u[off], v[off] + m, 0, m, f"crown-{m}")


def from_adjacency_list(
    neighbours: Sequence[Sequence[int]],
    reference: int = 0,
    max_vertices: int = VERTEX_CAP,
) -> FullGraph:
    """Build a custom graph; the receiver is the unique farthest vertex."""
    n = len(neighbours)
    if n == 0:
        raise InvalidParameterError("empty adjacency list")
    _check_cap(n, max_vertices)
    rows, cols = [], []
    for u, nbrs in enumerate(neighbours):
        for w in nbrs:
            if not 0 <= int(w) < n:
                raise InvalidParameterError(f"neighbour {w} of vertex {u} out of range")
            if u == int(w):
                raise InvalidParameterError(f"self-loop at vertex {u}")
            rows.append(u)
            cols.append(int(w))
    tmp = _from_edges(n, rows, cols, reference, reference, "custom")
    # Adjacency lists may be one-sided; _from_edges symmetrises them.
    dist = _bfs(tmp)
    last = np.flatnonzero(dist == dist.max())
    if len(last) != 1:
        raise UnsupportedTopologyError(
            f"last stratum has {len(last)} vertices; a single receiver is required"
        )
    return FullGraph(n, tmp.adjacency, reference, int(last[0]), "custom")


def _bfs(g: FullGraph) -> np.ndarray:
    dist = csgraph.shortest_path(g.adjacency, unweighted=True, indices=g.reference)
    if np.isinf(dist).any():
        raise UnsupportedTopologyError("graph is not connected")
    return dist.astype(int)


def stratify(g: FullGraph) -> tuple[Stratification, JacobiParams, DistanceMatrices]:
    """BFS-stratify ``g`` from its reference and extract the Jacobi data.

    Every vertex of ``Gamma_i`` must have the same number ``a_i`` of
    neighbours in ``Gamma_i``, ``b_i`` in ``Gamma_{i+1}`` and ``c_i`` in
    ``Gamma_{i-1}``; then ``alpha_i = a_i`` and ``beta_{i+1}**2 = b_i c_{i+1}``.
    """
    dist = _bfs(g)
    d = int(dist.max())
    order = np.argsort(dist, kind="stable")
    bounds = np.searchsorted(dist[order], np.arange(d + 2))
    strata = tuple(np.sort(order[bounds[i] : bounds[i + 1]]) for i in range(d + 1))
    kappa = np.array([len(s) for s in strata])

    coo = g.adjacency.tocoo()
    step = dist[coo.col] - dist[coo.row]
    counts = np.zeros((3, g.n_vertices), dtype=np.int64)
    for slot, delta in enumerate((-1, 0, 1)):
        counts[slot] = np.bincount(coo.row[step == delta], minlength=g.n_vertices)

    c, a, b = (np.empty(d + 1, dtype=np.int64) for _ in range(3))
    for i, layer in enumerate(strata):
        for arr, slot, label in ((c, 0, "c"), (a, 1, "a"), (b, 2, "b")):
            vals = counts[slot, layer]
            if vals.min() != vals.max():
                raise NotStratifiableError(
                    f"{label}_{i} is not constant over stratum {i} "
                    f"(values {vals.min()}..{vals.max()})"
                )
            arr[i] = vals[0]

    if kappa[d] != 1:
        raise UnsupportedTopologyError(
            f"last stratum has {kappa[d]} vertices; a single receiver is required"
        )
    if strata[d][0] != g.target:
        raise UnsupportedTopologyError(
            f"target {g.target} is not the last-stratum vertex {strata[d][0]}"
        )
    jp = JacobiParams(a.astype(float), (b[:-1] * c[1:]).astype(float), kappa)
    return Stratification(strata), jp, DistanceMatrices(g)


@dataclass(frozen=True, eq=False)
class DistanceRegularityReport:
    consistent: bool
    diameter: int
    #: ``p[k, i, j]``; entries involved in a violation are ``-1``.
    intersection: np.ndarray
    violation: Optional[tuple[int, int, int]] = None

    def p(self, k: int, i: int, j: int) -> int:
        return int(self.intersection[k, i, j])

    @property
    def intersection_array(self) -> tuple[list[int], list[int]]:
        """``({b_0..b_{d-1}}, {c_1..c_d})``."""
        d = self.diameter
        bs = [self.p(i, 1, i + 1) for i in range(d)]
        cs = [self.p(i, 1, i - 1) for i in range(1, d + 1)]
        return bs, cs


def check_distance_regularity(g: FullGraph) -> DistanceRegularityReport:
    """Count ``p^k_ij`` over every vertex pair at distance ``k`` by brute force."""
    dm = DistanceMatrices(g)
    dist = dm.distance
    d = dm.diameter
    mats = dm.matrices
    masks = [dist == k for k in range(d + 1)]
    table = np.full((d + 1, d + 1, d + 1), -1, dtype=np.int64)
    first_violation = None
    for i in range(d + 1):
        for j in range(d + 1):
            counts = np.rint(mats[i] @ mats[j]).astype(np.int64)
            for k in range(d + 1):
                vals = counts[masks[k]]
                if vals.min() == vals.max():
                    table[k, i, j] = vals[0]
                elif first_violation is None:
                    first_violation = (k, i, j)
    return DistanceRegularityReport(first_violation is None, d, table, first_violation)


@functools.lru_cache(maxsize=None)
def family_jacobi(family: str, param: int) -> JacobiParams:
    """Closed-form Jacobi data for the built-in families, with no vertex cap."""
    if family == "cycle":
        m = param
        if m < 2:
            raise InvalidParameterError(f"cycle needs m >= 2, got {m}")
        beta_sq = np.ones(m)
        beta_sq[0] = beta_sq[-1] = 2.0
        kappa = np.full(m + 1, 2)
        kappa[0] = kappa[-1] = 1
        return JacobiParams(np.zeros(m + 1), beta_sq, kappa)
    if family == "hypercube":
        d = param
        if d < 1:
            raise InvalidParameterError(f"hypercube needs d >= 1, got {d}")
        i = np.arange(1, d + 1)
        kappa = np.array([math.comb(d, k) for k in range(d + 1)], dtype=object)
        return JacobiParams(np.zeros(d + 1), (i * (d - i + 1)).astype(float), kappa.astype(float))
    if family == "crown":
        m = param
        if m < 3:
            raise InvalidParameterError(f"crown needs m >= 3, got {m}")
        return JacobiParams(
            np.zeros(4), np.array([m - 1, (m - 2) ** 2, m - 1], dtype=float), np.array([1, m - 1, m - 1, 1])
        )
    raise InvalidParameterError(f"unknown family {family!r}")


BUILDERS = {"cycle": build_cycle, "hypercube": build_hypercube, "crown": build_crown}

"""Column-stochastic transition matrices built from flow networks."""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import gcd
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import DanglingNode, DimensionError, ValidationError
from .network import FlowNetwork

DANGLING_POLICIES = ("error", "uniform", "self_loop")
COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class StochasticMatrix:
    """``matrix[i, j]`` is the probability of moving from node ``j`` to node ``i``."""

    matrix: np.ndarray
    year: Optional[int] = None
    dangling_policy: str = "error"
    nodes: Optional[tuple] = None

    def __post_init__(self):
        t = np.array(self.matrix, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionError(f"transition matrix must be square, got shape {t.shape}")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValidationError("transition matrix has negative or non-finite entries")
        sums = t.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > COLUMN_SUM_TOL)
        if bad.size:
            raise ValidationError(f"column {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        t.setflags(write=False)
        object.__setattr__(self, "matrix", t)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def as_matrix(T) -> np.ndarray:
    return T.matrix if isinstance(T, StochasticMatrix) else np.asarray(T, dtype=float)


def column_sums(w: np.ndarray) -> np.ndarray:
    """Column sums with Neumaier compensation.

    Near-exact sums keep ``w / colsum`` invariant under global rescaling of
    ``w`` to within a few ulps.
    """
    w = np.asarray(w, dtype=float)
    total = np.zeros(w.shape[1])
    comp = np.zeros(w.shape[1])
    for row in w:
        t = total + row
        comp += np.where(np.abs(total) >= np.abs(row), (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def normalize_columns(w: np.ndarray, dangling_policy: str = "error", nodes=None) -> np.ndarray:
    """Divide each column by its sum, handling zero columns per ``dangling_policy``."""
    if dangling_policy not in DANGLING_POLICIES:
        raise ValueError(f"unknown dangling policy {dangling_policy!r}")
    colsum = column_sums(w)
    dangling = np.flatnonzero(colsum == 0)
    if dangling.size and dangling_policy == "error":
        k = int(dangling[0])
        raise DanglingNode(k, nodes[k].label if nodes is not None else None)
    safe = np.where(colsum == 0, 1.0, colsum)
    t = w / safe
    if dangling.size:
        n = w.shape[0]
        if dangling_policy == "uniform":
            t[:, dangling] = 1.0 / n
        else:
            t[dangling, dangling] = 1.0
    return t


def to_stochastic(network: FlowNetwork, dangling_policy: str = "error") -> StochasticMatrix:
    """Column-normalise the flows: ``t[i, j] = w[i, j] / sum_i w[i, j]``.

    No damping is added.  Zero columns raise :class:`DanglingNode` under the
    default policy; ``"uniform"`` spreads them evenly and ``"self_loop"`` puts
    all mass on the diagonal.
    """
    t = normalize_columns(network.weights, dangling_policy, network.nodes)
    return StochasticMatrix(t, network.year, dangling_policy, network.nodes)


def apply(T, x) -> np.ndarray:
    """One step of the chain: returns ``T @ x`` for a probability vector ``x``."""
    t = as_matrix(T)
    x = np.asarray(x, dtype=float)
    if x.shape != (t.shape[1],):
        raise DimensionError(f"vector of length {x.size} for a {t.shape[1]}-state chain")
    if np.any(x < 0) or abs(x.sum() - 1.0) >= 1e-9:
        raise ValidationError("x must be a nonnegative vector summing to 1")
    return t @ x


@dataclass(frozen=True)
class Ergodicity:
    irreducible: bool
    aperiodic: bool

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic

    def to_dict(self) -> dict:
        return {"irreducible": self.irreducible, "aperiodic": self.aperiodic}


def _period(adj: csr_matrix, members: np.ndarray) -> int:
    """Period of a strongly connected class: gcd of ``level[u] + 1 - level[v]`` over its arcs."""
    sub = adj[members][:, members].tocsr()
    order = breadth_first_order(sub, 0, directed=True, return_predecessors=False)
    level = np.full(len(members), -1)
    level[0] = 0
    for u in order:
        nbrs = sub.indices[sub.indptr[u]:sub.indptr[u + 1]]
        fresh = nbrs[level[nbrs] < 0]
        level[fresh] = level[u] + 1
    coo = sub.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    period = 0
    for d in np.unique(diffs):
        period = gcd(period, int(d))
        if period == 1:
            break
    return period


def check_ergodicity(T) -> Ergodicity:
    """Irreducibility and aperiodicity of the positive-entry digraph.

    Aperiodicity is decided for every recurrent (closed) class; the chain is
    aperiodic when each of them has period 1.
    """
    t = as_matrix(T)
    # arc j -> i wherever t[i, j] > 0; adj[u, v] marks arc u -> v
    adj = csr_matrix(t.T > 0)
    count, labels = connected_components(adj, directed=True, connection="strong")
    coo = adj.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    closed = np.ones(count, dtype=bool)
    closed[labels[coo.row[leaving]]] = False
    aperiodic = True
    for c in np.flatnonzero(closed):
        members = np.flatnonzero(labels == c)
        if np.any(np.diag(t)[members] > 0):
            continue
        if _period(adj, members) != 1:
            aperiodic = False
            break
    return Ergodicity(irreducible=count == 1, aperiodic=aperiodic)


def dump_matrix_csv(T, target) -> None:
    """Write the matrix row-major as CSV with 17 significant digits."""
    t = as_matrix(T)
    own = isinstance(target, (str, os.PathLike))
    stream = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        for row in t:
            stream.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if own:
            stream.close()

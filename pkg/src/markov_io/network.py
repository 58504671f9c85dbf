"""Flow-network data model: node identity, weights, validation and grouping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DimensionError, InvalidFlow, TooSmall, UnknownNode, ValidationError

GOV_SECTOR = "GOV"
BALANCE_FLOOR = 1e-12


class Kind(str, enum.Enum):
    INDUSTRY = "industry"
    GOVERNMENT = "government"


@dataclass(frozen=True, order=True)
class NodeRef:
    """An industry of an economy, or the merged households/government node."""

    economy: str
    sector: str
    kind: Kind = None  # inferred from ``sector`` when omitted

    def __post_init__(self):
        inferred = Kind.GOVERNMENT if self.sector == GOV_SECTOR else Kind.INDUSTRY
        if self.kind is None:
            object.__setattr__(self, "kind", inferred)
        else:
            object.__setattr__(self, "kind", Kind(self.kind))
            if self.kind is not inferred:
                raise ValidationError(
                    f"{self.economy}/{self.sector}: kind {self.kind.value} requires "
                    f"sector {'GOV' if self.kind is Kind.GOVERNMENT else '!= GOV'}"
                )

    @property
    def label(self) -> str:
        return f"{self.economy}-{self.sector}"


@dataclass(frozen=True)
class FlowNetwork:
    """Annual money flows between nodes.

    ``weights[i, j]`` is the flow from node ``j`` to node ``i``, so column
    ``j`` holds everything node ``j`` pays out.  The matrix is stored dense
    and made read-only on construction.
    """

    year: int
    nodes: tuple
    weights: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        w = np.array(self.weights, dtype=float, copy=True)
        n = len(nodes)
        if n < 2:
            raise TooSmall(f"network needs at least 2 nodes, got {n}")
        if w.shape != (n, n):
            raise DimensionError(f"weights shape {w.shape} does not match {n} nodes")
        if not np.all(np.isfinite(w)):
            raise InvalidFlow("weights contain NaN or infinite entries")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise InvalidFlow(f"negative flow {w[i, j]} from {nodes[j].label} to {nodes[i].label}")
        index = {}
        for k, node in enumerate(nodes):
            key = (node.economy, node.sector)
            if key in index:
                raise ValidationError(f"duplicate node {node.label}")
            index[key] = k
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "year", int(self.year))
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index_of(self, node) -> int:
        """Index of a :class:`NodeRef` or an ``(economy, sector)`` pair."""
        key = (node.economy, node.sector) if isinstance(node, NodeRef) else tuple(node)
        try:
            return self._index[key]
        except KeyError:
            raise UnknownNode(f"unknown node {key[0]}-{key[1]}") from None

    @property
    def economies(self) -> list:
        seen = dict.fromkeys(node.economy for node in self.nodes)
        return list(seen)

    def scaled(self, factor: float) -> "FlowNetwork":
        return FlowNetwork(self.year, self.nodes, self.weights * factor)

    def permuted(self, order: Sequence[int]) -> "FlowNetwork":
        """Relabel nodes so that new node ``k`` is old node ``order[k]``."""
        order = np.asarray(order)
        nodes = tuple(self.nodes[k] for k in order)
        return FlowNetwork(self.year, nodes, self.weights[np.ix_(order, order)])


@dataclass(frozen=True)
class ValidationReport:
    dangling_nodes: list
    source_only_nodes: list
    strongly_connected: bool
    balance_residual: float
    totals: float

    def to_dict(self) -> dict:
        return {
            "dangling_nodes": list(self.dangling_nodes),
            "source_only_nodes": list(self.source_only_nodes),
            "strongly_connected": self.strongly_connected,
            "balance_residual": self.balance_residual,
            "totals": self.totals,
        }


def build_network(year: int, node_list: Iterable[NodeRef], edge_list: Iterable) -> FlowNetwork:
    """Assemble a :class:`FlowNetwork` from ``(source, target, flow)`` edges.

    Duplicate edges are summed.  The order of ``node_list`` fixes the index.
    """
    nodes = tuple(node_list)
    if len(nodes) < 2:
        raise TooSmall(f"network needs at least 2 nodes, got {len(nodes)}")
    index = {(node.economy, node.sector): k for k, node in enumerate(nodes)}
    w = np.zeros((len(nodes), len(nodes)))
    for source, target, flow in edge_list:
        flow = float(flow)
        if not np.isfinite(flow) or flow < 0:
            raise InvalidFlow(f"invalid flow {flow} from {source.label} to {target.label}")
        try:
            j = index[(source.economy, source.sector)]
            i = index[(target.economy, target.sector)]
        except KeyError as exc:
            raise UnknownNode(f"edge endpoint {exc.args[0][0]}-{exc.args[0][1]} not in node list") from None
        w[i, j] += flow
    return FlowNetwork(year, nodes, w)


def positive_digraph_strongly_connected(matrix: np.ndarray) -> bool:
    adjacency = csr_matrix(np.asarray(matrix) > 0)
    count, _ = connected_components(adjacency, directed=True, connection="strong")
    return count == 1


def validate(network: FlowNetwork) -> ValidationReport:
    w = network.weights
    colsum = w.sum(axis=0)
    rowsum = w.sum(axis=1)
    residual = np.abs(rowsum - colsum) / np.maximum(colsum, BALANCE_FLOOR)
    return ValidationReport(
        dangling_nodes=[int(k) for k in np.flatnonzero(colsum == 0)],
        source_only_nodes=[int(k) for k in np.flatnonzero(rowsum == 0)],
        strongly_connected=positive_digraph_strongly_connected(w),
        balance_residual=float(residual.max()),
        totals=float(w.sum()),
    )


GROUPINGS = ("by_economy", "by_sector", "by_kind")


def group_key(node: NodeRef, grouping: str) -> str:
    if grouping == "by_economy":
        return node.economy
    if grouping == "by_sector":
        return node.sector
    if grouping == "by_kind":
        return node.kind.value
    raise ValueError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")


def group_sums(network: FlowNetwork, vector, grouping: str = "by_economy") -> Mapping[str, float]:
    """Sum a per-node vector within economies, sectors or node kinds.

    Groups appear in first-seen node order.
    """
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (network.n,):
        raise DimensionError(f"vector of length {vector.size} for a {network.n}-node network")
    keys = [group_key(node, grouping) for node in network.nodes]
    labels = list(dict.fromkeys(keys))
    lookup = {label: k for k, label in enumerate(labels)}
    codes = np.array([lookup[k] for k in keys])
    totals = np.bincount(codes, weights=vector, minlength=len(labels))
    return {label: float(total) for label, total in zip(labels, totals)}


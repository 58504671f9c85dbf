"""Node-slowdown perturbations and the systemic risk measures built on them.

Slowing node ``k`` by ``alpha`` percent multiplies every flow into or out of
``k`` by ``f = 1 + alpha / 100`` and re-normalises the columns.  The
self-loop ``w[k, k]`` is both an inflow and an outflow; by default it is
scaled once (``self_loop_scaling="once"``), optionally twice.

For each experiment the steady state is recomputed, warm-started from the
baseline.  A node ``j != k`` counts as affected when its share moves by more
than ``influence_threshold`` relative to its own baseline share.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chain import StochasticMatrix, column_sums, to_stochastic
from .errors import (
    DanglingAfterPerturbation,
    DanglingNode,
    InvalidAlpha,
    MarkovIOError,
    ValidationError,
)
from .network import FlowNetwork
from .spectral import DEFAULT_TOLERANCE, kemeny_eigen, kemeny_fundamental, steady_state

logger = logging.getLogger(__name__)

SELF_LOOP_SCALINGS = ("once", "twice")
DEFAULT_ALPHA = -99.0
DEFAULT_INFLUENCE_THRESHOLD = 0.005
DEFAULT_DISPLAY_THRESHOLD = 0.01
CROSSCHECK_FRACTION = 0.01
CROSSCHECK_RTOL = 1e-8


@dataclass(frozen=True)
class PerturbationSpec:
    node: int
    alpha: float = DEFAULT_ALPHA
    influence_threshold: float = DEFAULT_INFLUENCE_THRESHOLD
    display_threshold: float = DEFAULT_DISPLAY_THRESHOLD

    def __post_init__(self):
        check_alpha(self.alpha)
        for name in ("influence_threshold", "display_threshold"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")

    @property
    def factor(self) -> float:
        return 1.0 + self.alpha / 100.0


@dataclass(frozen=True)
class PerturbationResult:
    spec: PerturbationSpec
    pi: np.ndarray
    delta_pi: np.ndarray
    relative_delta: np.ndarray
    affected: tuple
    systemic_influence: float
    self_response: float
    kemeny_change_pct: float = float("nan")
    iterations: int = 0

    @property
    def self_response_gap(self) -> float:
        """``|self_response - alpha/100|``; reported, not expected to vanish."""
        return abs(self.self_response - self.spec.alpha / 100.0)

    @property
    def displayed(self) -> tuple:
        """Nodes whose relative change reaches ``display_threshold``."""
        hits = np.abs(self.relative_delta) >= self.spec.display_threshold
        hits[self.spec.node] = False
        return tuple(int(k) for k in np.flatnonzero(hits))


@dataclass(frozen=True)
class Baseline:
    """Unperturbed quantities shared read-only by every experiment."""

    network: FlowNetwork
    transition: StochasticMatrix
    pi: np.ndarray
    kemeny: Optional[float] = None


@dataclass
class SweepResult:
    year: int
    nodes: tuple
    alpha: float
    influence_threshold: float
    self_loop_scaling: str
    structural_power: np.ndarray
    systemic_influence: np.ndarray
    systemic_fragility: np.ndarray
    kemeny_change_pct: np.ndarray
    self_response: np.ndarray
    affected: list
    failures: dict = field(default_factory=dict)
    crosschecks: dict = field(default_factory=dict)

    def rows(self):
        for k, node in enumerate(self.nodes):
            yield (
                node,
                float(self.structural_power[k]),
                float(self.systemic_influence[k]),
                float(self.systemic_fragility[k]),
                float(self.kemeny_change_pct[k]),
            )


def check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or alpha <= -100:
        raise InvalidAlpha(f"alpha must be finite and > -100, got {alpha}")


def make_baseline(
    network: FlowNetwork,
    dangling_policy: str = "error",
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    with_kemeny: bool = True,
) -> Baseline:
    transition = to_stochastic(network, dangling_policy)
    state = steady_state(transition, tolerance, seed)
    kemeny = kemeny_fundamental(transition, state.pi).value if with_kemeny else None
    return Baseline(network, transition, state.pi, kemeny)


def _perturbed(w: np.ndarray, colsum: np.ndarray, node: int, f: float, scaling: str, policy: str) -> np.ndarray:
    """Column-normalised matrix after scaling row and column ``node`` of ``w`` by ``f``."""
    if scaling not in SELF_LOOP_SCALINGS:
        raise ValueError(f"self_loop_scaling must be one of {SELF_LOOP_SCALINGS}, got {scaling!r}")
    row = w[node, :] * f
    col = w[:, node] * f
    loop = w[node, node] * (f * f if scaling == "twice" else f)
    row[node] = col[node] = loop
    # written so that f == 1 reproduces colsum exactly
    new_colsum = colsum + (row - w[node, :])
    new_colsum[node] = f * colsum[node] + (loop - f * w[node, node])
    dangling = new_colsum == 0
    if np.any(dangling & (colsum > 0)):
        k = int(np.flatnonzero(dangling & (colsum > 0))[0])
        raise DanglingAfterPerturbation(f"column {k} has zero sum after perturbing node {node}")
    safe = np.where(dangling, 1.0, new_colsum)
    t = w / safe
    t[node, :] = row / safe
    t[:, node] = col / safe[node]
    if np.any(dangling):
        idx = np.flatnonzero(dangling)
        if policy == "uniform":
            t[:, idx] = 1.0 / w.shape[0]
        elif policy == "self_loop":
            t[idx, idx] = 1.0
        else:
            raise DanglingNode(int(idx[0]))
    return t


def perturb_node(
    network: FlowNetwork,
    node,
    alpha: float,
    self_loop_scaling: str = "once",
    dangling_policy: str = "error",
) -> StochasticMatrix:
    """Transition matrix after slowing ``node`` by ``alpha`` percent."""
    check_alpha(alpha)
    k = node if isinstance(node, (int, np.integer)) else network.index_of(node)
    w = network.weights
    t = _perturbed(w, column_sums(w), int(k), 1.0 + alpha / 100.0, self_loop_scaling, dangling_policy)
    return StochasticMatrix(t, network.year, dangling_policy, network.nodes)


def _relative(delta: np.ndarray, pi: np.ndarray) -> np.ndarray:
    out = np.copysign(np.where(delta == 0, 0.0, np.inf), delta)
    np.divide(delta, pi, out=out, where=pi > 0)
    return out


def _impact(
    base: Baseline,
    colsum: np.ndarray,
    spec: PerturbationSpec,
    scaling: str,
    tolerance: float,
    with_kemeny: bool,
):
    t = _perturbed(base.network.weights, colsum, spec.node, spec.factor, scaling, base.transition.dangling_policy)
    state = steady_state(t, tolerance, start=base.pi)
    delta = state.pi - base.pi
    relative = _relative(delta, base.pi)
    hits = np.abs(relative) > spec.influence_threshold
    hits[spec.node] = False
    affected = tuple(int(j) for j in np.flatnonzero(hits))
    change = float("nan")
    if with_kemeny:
        if base.kemeny is None:
            raise ValueError("baseline has no Kemeny constant")
        k_new = kemeny_fundamental(t, state.pi).value
        change = 100.0 * (k_new - base.kemeny) / base.kemeny
    result = PerturbationResult(
        spec=spec,
        pi=state.pi,
        delta_pi=delta,
        relative_delta=relative,
        affected=affected,
        systemic_influence=len(affected) / base.network.n,
        self_response=float(relative[spec.node]),
        kemeny_change_pct=change,
        iterations=state.iterations,
    )
    return result, t


def node_impact(
    network: FlowNetwork,
    spec: PerturbationSpec,
    baseline: Optional[Baseline] = None,
    self_loop_scaling: str = "once",
    tolerance: float = DEFAULT_TOLERANCE,
    with_kemeny: bool = True,
    dangling_policy: str = "error",
) -> PerturbationResult:
    """Effect of one slowdown on every node's steady-state share and on the Kemeny constant."""
    if baseline is None:
        baseline = make_baseline(network, dangling_policy, tolerance, with_kemeny=with_kemeny)
    result, _ = _impact(baseline, column_sums(network.weights), spec, self_loop_scaling, tolerance, with_kemeny)
    return result


class _Checkpoint:
    """Append-only JSON-lines record of finished experiments."""

    def __init__(self, path, header: dict):
        self.path = path
        self.header = header
        self.done = {}
        self._lock = threading.Lock()
        if os.path.exists(path) and os.path.getsize(path) > 0:
            with open(path, encoding="utf-8") as fh:
                lines = [line for line in fh if line.strip()]
            if json.loads(lines[0]) != header:
                raise ValidationError(f"checkpoint {path} was written with a different configuration")
            for line in lines[1:]:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # torn final write
                self.done[rec["node"]] = rec
            self._fh = open(path, "a", encoding="utf-8")
        else:
            self._fh = open(path, "w", encoding="utf-8")
            self._fh.write(json.dumps(header) + "\n")
            self._fh.flush()

    def write(self, rec: dict):
        with self._lock:
            self._fh.write(json.dumps(rec) + "\n")
            self._fh.flush()

    def close(self):
        self._fh.close()


def sweep(
    network: FlowNetwork,
    alpha: float = DEFAULT_ALPHA,
    influence_threshold: float = DEFAULT_INFLUENCE_THRESHOLD,
    self_loop_scaling: str = "once",
    with_kemeny: bool = True,
    tolerance: float = DEFAULT_TOLERANCE,
    dangling_policy: str = "error",
    seed: int = 0,
    threads: int = 1,
    baseline: Optional[Baseline] = None,
    checkpoint=None,
    crosscheck_fraction: float = CROSSCHECK_FRACTION,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SweepResult:
    """Perturb every node in turn and aggregate influence, fragility and Kemeny change.

    Experiments are independent and may run on ``threads`` workers; results
    are assembled in node order, so the output does not depend on
    scheduling.  A failing experiment is recorded in ``failures`` and leaves
    NaN in that node's influence and Kemeny columns.  With ``checkpoint`` set
    to a file path, finished experiments are appended there and skipped when
    the sweep is restarted with the same configuration.
    """
    check_alpha(alpha)
    n = network.n
    if baseline is None:
        baseline = make_baseline(network, dangling_policy, tolerance, seed, with_kemeny)
    colsum = column_sums(network.weights)
    rng = np.random.default_rng(seed)
    sample = set()
    if with_kemeny and crosscheck_fraction > 0:
        size = max(1, int(round(crosscheck_fraction * n)))
        sample = {int(k) for k in rng.choice(n, size=min(size, n), replace=False)}

    store = None
    if checkpoint is not None:
        header = {
            "year": network.year,
            "n": n,
            "alpha": alpha,
            "influence_threshold": influence_threshold,
            "self_loop_scaling": self_loop_scaling,
            "with_kemeny": with_kemeny,
            "tolerance": tolerance,
        }
        store = _Checkpoint(checkpoint, header)

    finished = [0]
    lock = threading.Lock()

    def run(k):
        if store is not None and k in store.done:
            rec = store.done[k]
        else:
            try:
                spec = PerturbationSpec(k, alpha, influence_threshold)
                res, t = _impact(baseline, colsum, spec, self_loop_scaling, tolerance, with_kemeny)
                rec = {
                    "node": k,
                    "affected": list(res.affected),
                    "kemeny_change_pct": res.kemeny_change_pct,
                    "self_response": res.self_response,
                }
                if k in sample:
                    eig = kemeny_eigen(t).value
                    fund = baseline.kemeny * (1 + res.kemeny_change_pct / 100.0)
                    rec["crosscheck"] = abs(eig - fund) / abs(eig)
                    if rec["crosscheck"] > CROSSCHECK_RTOL:
                        logger.warning("node %d: eigen and fundamental Kemeny differ by %.3g", k, rec["crosscheck"])
            except MarkovIOError as exc:
                rec = {"node": k, "error": f"{type(exc).__name__}: {exc}"}
            if store is not None:
                store.write(rec)
        if progress is not None:
            with lock:
                finished[0] += 1
                progress(finished[0], n)
        return rec

    try:
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                records = list(pool.map(run, range(n)))
        else:
            records = [run(k) for k in range(n)]
    finally:
        if store is not None:
            store.close()

    influence = np.full(n, np.nan)
    kemeny = np.full(n, np.nan)
    self_response = np.full(n, np.nan)
    hit_counts = np.zeros(n)
    affected, failures, crosschecks = [], {}, {}
    for rec in records:
        k = rec["node"]
        if "error" in rec:
            failures[k] = rec["error"]
            affected.append(None)
            continue
        hits = rec["affected"]
        affected.append(tuple(hits))
        influence[k] = len(hits) / n
        hit_counts[hits] += 1
        kemeny[k] = rec["kemeny_change_pct"] if rec["kemeny_change_pct"] is not None else np.nan
        self_response[k] = rec["self_response"]
        if "crosscheck" in rec:
            crosschecks[k] = rec["crosscheck"]
    return SweepResult(
        year=network.year,
        nodes=network.nodes,
        alpha=alpha,
        influence_threshold=influence_threshold,
        self_loop_scaling=self_loop_scaling,
        structural_power=baseline.pi.copy(),
        systemic_influence=influence,
        systemic_fragility=hit_counts / n,
        kemeny_change_pct=kemeny,
        self_response=self_response,
        affected=affected,
        failures=failures,
        crosschecks=crosschecks,
    )


def kemeny_sensitivity_sweep(
    network: FlowNetwork,
    alpha: float = DEFAULT_ALPHA,
    **kwargs,
) -> np.ndarray:
    """Percent change of the Kemeny constant when each node in turn is slowed by ``alpha``.

    Failed experiments yield NaN.
    """
    kwargs["with_kemeny"] = True
    return sweep(network, alpha, **kwargs).kemeny_change_pct

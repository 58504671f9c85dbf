"""Brute-force reference computations for small chains.

Everything here uses dense direct solves and deliberately shares no code
with the power-iteration, spectral or perturbation paths it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import NumericalFailure

MAX_ORACLE_N = 200


def _matrix(T):
    return np.array(getattr(T, "matrix", T), dtype=float)


def stationary_direct(T) -> np.ndarray:
    """Solve ``(I - T) pi = 0`` with one equation replaced by ``sum(pi) = 1``."""
    t = _matrix(T)
    n = t.shape[0]
    a = np.eye(n) - t
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        return linalg.solve(a, b)
    except linalg.LinAlgError as exc:
        raise NumericalFailure(f"stationary system is singular: {exc}") from None


def mfpt_matrix(T) -> np.ndarray:
    """``m[a, b]``: expected steps from ``a`` to first reach ``b``; zero diagonal.

    For each target ``b`` solves the first-step equations
    ``m[a] = 1 + sum_c P(a -> c) m[c]`` (``a != b``), ``m[b] = 0``.
    """
    t = _matrix(T)
    n = t.shape[0]
    if n > MAX_ORACLE_N:
        raise ValueError(f"oracle limited to {MAX_ORACLE_N} states")
    p = t.T  # p[a, c] = probability a -> c
    m = np.zeros((n, n))
    for b in range(n):
        a_mat = np.eye(n) - p
        a_mat[b, :] = 0.0
        a_mat[b, b] = 1.0
        rhs = np.ones(n)
        rhs[b] = 0.0
        try:
            m[:, b] = linalg.solve(a_mat, rhs)
        except linalg.LinAlgError as exc:
            raise NumericalFailure(f"first-passage system for target {b} is singular: {exc}") from None
    return m


def kemeny_from_mfpt(T, pi, m) -> np.ndarray:
    """``1 + sum_{b != a} pi[b] m[a, b]`` for every start ``a``; constant for a valid chain."""
    pi = np.asarray(pi, dtype=float)
    m = np.asarray(m, dtype=float)
    off = m - np.diag(np.diag(m))
    return 1.0 + off @ pi


def perturbed_weights(w, node, alpha, self_loop_scaling="once"):
    """Explicit entry-by-entry slowdown of ``node``."""
    w = np.array(w, dtype=float)
    n = w.shape[0]
    f = 1.0 + alpha / 100.0
    out = w.copy()
    for i in range(n):
        for j in range(n):
            if i == node and j == node:
                out[i, j] = w[i, j] * (f * f if self_loop_scaling == "twice" else f)
            elif i == node or j == node:
                out[i, j] = w[i, j] * f
    return out


@dataclass
class PerturbationCheck:
    alpha: float
    max_pi_error: float = 0.0
    max_zero_sum_error: float = 0.0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def exhaustive_perturbation_check(
    network,
    alpha,
    influence_threshold=0.005,
    self_loop_scaling="once",
    tol=1e-9,
) -> PerturbationCheck:
    """Recompute every single-node experiment by direct solve and compare with :mod:`markov_io.perturb`."""
    from .perturb import PerturbationSpec, make_baseline, node_impact

    if network.n > 6:
        raise ValueError("exhaustive check is meant for networks of at most 6 nodes")
    w = network.weights
    pi0 = stationary_direct(w / w.sum(axis=0))
    base = make_baseline(network, with_kemeny=False)
    report = PerturbationCheck(alpha)
    for k in range(network.n):
        wp = perturbed_weights(w, k, alpha, self_loop_scaling)
        pi1 = stationary_direct(wp / wp.sum(axis=0))
        expected_delta = pi1 - pi0
        got = node_impact(
            network,
            PerturbationSpec(k, alpha, influence_threshold),
            baseline=base,
            self_loop_scaling=self_loop_scaling,
            with_kemeny=False,
        )
        err = float(np.abs(got.pi - pi1).max())
        delta_err = float(np.abs(got.delta_pi - expected_delta).max())
        zero_sum = abs(float(got.delta_pi.sum()))
        report.max_pi_error = max(report.max_pi_error, err, delta_err)
        report.max_zero_sum_error = max(report.max_zero_sum_error, zero_sum)
        if err > tol or delta_err > tol:
            report.mismatches.append((k, err, delta_err))
        rel = expected_delta / pi0
        expected_affected = tuple(j for j in range(network.n) if j != k and abs(rel[j]) > influence_threshold)
        if expected_affected != got.affected:
            report.mismatches.append((k, "affected", expected_affected, got.affected))
        if zero_sum > 1e-10:
            report.mismatches.append((k, "zero-sum", zero_sum))
    return report

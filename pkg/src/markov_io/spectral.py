"""Steady states, power-iteration mixing times and Kemeny constants."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import as_matrix
from .errors import DimensionError, NoConvergence, NotIrreducible, NumericalFailure

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MIXING_TOLERANCE = 1e-8
DEFAULT_RUNS = 20
MAX_ITERATIONS = 1_000_000
UNIT_EIGENVALUE_TOL = 1e-10
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class SteadyState:
    pi: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class MixingTimeEstimate:
    """Power-iteration counts to reach ``tolerance`` from random starts.

    The count depends on the tolerance, so estimates are only comparable
    when computed with the same tolerance.
    """

    mean_iterations: float
    std_iterations: float
    runs: int
    tolerance: float
    seed: int
    counts: tuple = ()


@dataclass(frozen=True)
class KemenyValue:
    value: float
    method: str
    imag_residual: float = 0.0


def random_start(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the open simplex (normalised exponentials)."""
    x = rng.exponential(size=n)
    return x / x.sum()


def start_vectors(n: int, runs: int, seed: int) -> list:
    """One independent start per run, each from its own child of ``seed``."""
    children = np.random.SeedSequence(seed).spawn(runs)
    return [random_start(n, np.random.default_rng(child)) for child in children]


def power_iterate(t: np.ndarray, x: np.ndarray, tolerance: float, max_iter: int = MAX_ITERATIONS):
    """Apply ``t`` until successive iterates differ by less than ``tolerance`` in L1.

    Returns ``(x, iterations)`` where ``x`` is the last iterate.
    """
    for k in range(1, max_iter + 1):
        y = t @ x
        y /= y.sum()
        if np.abs(y - x).sum() < tolerance:
            return y, k
        x = y
    raise NoConvergence(f"power iteration did not reach tolerance {tolerance:g} in {max_iter} iterations")


def steady_state(
    T,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    start: Optional[np.ndarray] = None,
    max_iter: int = MAX_ITERATIONS,
) -> SteadyState:
    """Stationary vector ``pi = T pi`` by power iteration.

    Starts from ``start`` when given (warm start), otherwise from a seeded
    random point of the simplex.  A start that already meets the tolerance is
    returned unchanged with zero iterations.  The chain should be irreducible and
    aperiodic; otherwise the iteration may stall and raise
    :class:`NoConvergence`.
    """
    t = as_matrix(T)
    n = t.shape[0]
    if start is None:
        x = random_start(n, np.random.default_rng(seed))
    else:
        x = np.array(start, dtype=float)
        if x.shape != (n,):
            raise DimensionError(f"start vector of length {x.size} for a {n}-state chain")
        x /= x.sum()
        residual = float(np.abs(t @ x - x).sum())
        if residual < tolerance:
            return SteadyState(x, 0, residual)
    total = 0
    while True:
        x, k = power_iterate(t, x, tolerance, max_iter - total)
        total += k
        x = x / x.sum()
        residual = float(np.abs(t @ x - x).sum())
        if residual < tolerance:
            return SteadyState(x, total, residual)


def mixing_time(
    T,
    tolerance: float = DEFAULT_MIXING_TOLERANCE,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    threads: int = 1,
    max_iter: int = MAX_ITERATIONS,
) -> MixingTimeEstimate:
    """Mean and standard deviation of power-iteration counts over ``runs`` random starts."""
    if runs < 1:
        raise ValueError("runs must be positive")
    t = as_matrix(T)
    starts = start_vectors(t.shape[0], runs, seed)

    def one(item):
        run, x0 = item
        try:
            return power_iterate(t, x0.copy(), tolerance, max_iter)[1]
        except NoConvergence as exc:
            raise NoConvergence(str(exc), run=run) from None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            counts = list(pool.map(one, enumerate(starts)))
    else:
        counts = [one(item) for item in enumerate(starts)]
    arr = np.array(counts, dtype=float)
    return MixingTimeEstimate(float(arr.mean()), float(arr.std()), runs, tolerance, seed, tuple(counts))


def kemeny_eigen(T) -> KemenyValue:
    """Kemeny constant from the spectrum: ``1 + sum 1 / (1 - lambda)`` over eigenvalues other than 1."""
    t = as_matrix(T)
    eigenvalues = np.linalg.eigvals(t)
    unit = int(np.argmin(np.abs(eigenvalues - 1.0)))
    rest = np.delete(eigenvalues, unit)
    if np.any(np.abs(rest - 1.0) < UNIT_EIGENVALUE_TOL):
        raise NotIrreducible("eigenvalue 1 is not simple")
    total = 1.0 + np.sum(1.0 / (1.0 - rest))
    imag = abs(float(np.imag(total)))
    if imag >= IMAG_TOL:
        raise NumericalFailure(f"Kemeny sum has imaginary part {imag:.3g}")
    return KemenyValue(float(np.real(total)), "eigen", imag)


def kemeny_fundamental(T, pi) -> KemenyValue:
    """Kemeny constant as the trace of ``(I - T + pi 1^T)^-1``."""
    t = as_matrix(T)
    pi = np.asarray(pi, dtype=float)
    n = t.shape[0]
    if pi.shape != (n,):
        raise DimensionError(f"pi of length {pi.size} for a {n}-state chain")
    a = np.eye(n) - t + np.outer(pi, np.ones(n))
    try:
        z = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"fundamental matrix is singular: {exc}") from None
    value = float(np.trace(z))
    if not np.isfinite(value):
        raise NumericalFailure("fundamental matrix trace is not finite")
    return KemenyValue(value, "fundamental")

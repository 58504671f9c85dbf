"""Cross-year analytics over a :class:`~markov_io.ingest.Panel`."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .chain import check_ergodicity, to_stochastic
from .errors import InsufficientHistory, KeyMismatch, MarkovIOError, NotIrreducible, ValidationError
from .ingest import Panel
from .network import group_sums
from .spectral import (
    DEFAULT_MIXING_TOLERANCE,
    DEFAULT_RUNS,
    DEFAULT_TOLERANCE,
    SteadyState,
    kemeny_eigen,
    mixing_time,
    steady_state,
)

DEFAULT_LAGS = (3, 4, 5, 6)
FORECAST_TARGETS = ("gap", "pi_share", "gdp_share")


@dataclass
class YearSeries:
    metric: str
    values: dict
    std: Optional[dict] = None

    @property
    def years(self) -> list:
        return sorted(self.values)


@dataclass
class Globalization:
    mixing: YearSeries
    kemeny: YearSeries
    failures: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def globalization_indices(
    panel: Panel,
    tolerance: float = DEFAULT_MIXING_TOLERANCE,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    dangling_policy: str = "error",
    threads: int = 1,
) -> Globalization:
    """Mixing-time and Kemeny series, every year computed with the same settings.

    Years whose chain is not irreducible and aperiodic, or whose computation
    fails, are left out of both series and listed in ``failures``.
    """

    def one(net):
        try:
            t = to_stochastic(net, dangling_policy)
            erg = check_ergodicity(t)
            if not erg.ergodic:
                raise NotIrreducible(f"chain is not ergodic (irreducible={erg.irreducible}, aperiodic={erg.aperiodic})")
            return mixing_time(t, tolerance, runs, seed), kemeny_eigen(t).value
        except MarkovIOError as exc:
            return f"{type(exc).__name__}: {exc}"

    results = _map(one, panel.networks, threads)
    mixing, std, kemeny, failures = {}, {}, {}, {}
    for year, res in zip(panel.years, results):
        if isinstance(res, str):
            failures[year] = res
            continue
        est, k = res
        mixing[year] = est.mean_iterations
        std[year] = est.std_iterations
        kemeny[year] = k
    config = {"tolerance": tolerance, "runs": runs, "seed": seed, "dangling_policy": dangling_policy}
    return Globalization(YearSeries("mixing_time", mixing, std), YearSeries("kemeny", kemeny), failures, config)


def steady_states(
    panel: Panel,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    dangling_policy: str = "error",
    threads: int = 1,
) -> dict:
    """Year -> :class:`SteadyState` for every network in the panel."""
    states = _map(lambda net: steady_state(to_stochastic(net, dangling_policy), tolerance, seed), panel.networks, threads)
    return dict(zip(panel.years, states))


@dataclass(frozen=True)
class TrackPoint:
    pi_share: float
    gdp_share: float

    @property
    def gap(self) -> float:
        """Positive: structural potential; negative: GDP share above structural power."""
        return self.pi_share - self.gdp_share


@dataclass
class EconomyTrack:
    economy: str
    points: dict

    def series(self, target: str = "gap") -> dict:
        if target not in FORECAST_TARGETS:
            raise ValueError(f"target must be one of {FORECAST_TARGETS}")
        return {year: getattr(p, target) for year, p in sorted(self.points.items())}


def economy_tracks(
    panel: Panel,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    dangling_policy: str = "error",
    threads: int = 1,
    states: Optional[Mapping[int, SteadyState]] = None,
) -> list:
    """Per economy and year: aggregated steady-state share next to GDP share."""
    if panel.gdp is None:
        raise ValidationError("panel has no GDP data")
    network_economies = panel.networks[0].economies
    for year in panel.years:
        gdp_economies = set(panel.gdp.for_year(year))
        if gdp_economies != set(network_economies):
            missing_net = sorted(gdp_economies - set(network_economies))
            missing_gdp = sorted(set(network_economies) - gdp_economies)
            raise KeyMismatch(
                f"{year}: economies only in GDP data {missing_net}, only in network {missing_gdp}",
                missing_in_network=missing_net,
                missing_in_gdp=missing_gdp,
            )
    if states is None:
        states = steady_states(panel, tolerance, seed, dangling_policy, threads)
    tracks = {eco: EconomyTrack(eco, {}) for eco in network_economies}
    for net in panel.networks:
        shares = group_sums(net, states[net.year].pi, "by_economy")
        gdp = panel.gdp.for_year(net.year)
        for eco, share in shares.items():
            tracks[eco].points[net.year] = TrackPoint(share, gdp[eco])
    return list(tracks.values())


@dataclass(frozen=True)
class Forecast:
    economy: Optional[str]
    base_year: Optional[int]
    horizon: int
    projections: dict
    median: tuple

    def rows(self):
        """``(year, lag, value)`` triples, the median rows last."""
        for lag, values in self.projections.items():
            for h, value in enumerate(values, start=1):
                yield self._year(h), lag, value
        for h, value in enumerate(self.median, start=1):
            yield self._year(h), "median", value

    def _year(self, h):
        return self.base_year + h if self.base_year is not None else h


def forecast(
    series,
    lags: Sequence[int] = DEFAULT_LAGS,
    horizon: int = 5,
    economy: Optional[str] = None,
) -> Forecast:
    """Extrapolate a yearly series with trailing means of its first differences.

    For each lag ``L`` the slope is the mean of the last ``L`` year-over-year
    differences and the projection continues the last value linearly for
    ``horizon`` steps.  ``median`` is the pointwise median over lags.
    ``series`` is a mapping year -> value or a plain sequence.
    """
    if isinstance(series, Mapping):
        years = sorted(series)
        values = np.array([series[y] for y in years], dtype=float)
        base_year = years[-1] if years else None
    else:
        values = np.asarray(series, dtype=float)
        base_year = None
    lags = tuple(int(lag) for lag in lags)
    if not lags or min(lags) < 1:
        raise ValueError("lags must be positive integers")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if values.size < max(lags) + 1:
        raise InsufficientHistory(f"need at least {max(lags) + 1} observations, got {values.size}")
    diffs = np.diff(values)
    steps = np.arange(1, horizon + 1)
    projections = {}
    for lag in lags:
        slope = diffs[-lag:].mean()
        projections[lag] = tuple(float(v) for v in values[-1] + slope * steps)
    median = np.median(np.array(list(projections.values())), axis=0)
    return Forecast(economy, base_year, horizon, projections, tuple(float(v) for v in median))

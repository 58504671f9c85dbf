"""Markov-chain analytics for world input-output networks.

Yearly flow tables become column-stochastic chains; the package computes
steady states (structural power), power-iteration mixing times and Kemeny
constants (globalization indices), and node-slowdown perturbation measures
(systemic influence, systemic fragility, Kemeny sensitivity).
"""

from .chain import StochasticMatrix, apply, check_ergodicity, to_stochastic
from .errors import MarkovIOError
from .estimators import MarkovChainModel, SystemicRiskAnalyzer
from .ingest import GdpSeries, Panel, load_panel, parse_flow_csv, parse_gdp_csv, write_flow_csv
from .network import FlowNetwork, Kind, NodeRef, build_network, group_sums, validate
from .panel import economy_tracks, forecast, globalization_indices
from .perturb import (
    PerturbationSpec,
    kemeny_sensitivity_sweep,
    node_impact,
    perturb_node,
    sweep,
)
from .spectral import kemeny_eigen, kemeny_fundamental, mixing_time, steady_state

__version__ = "0.1.0"

__all__ = [
    "FlowNetwork",
    "GdpSeries",
    "Kind",
    "MarkovChainModel",
    "MarkovIOError",
    "NodeRef",
    "Panel",
    "PerturbationSpec",
    "StochasticMatrix",
    "SystemicRiskAnalyzer",
    "apply",
    "build_network",
    "check_ergodicity",
    "economy_tracks",
    "forecast",
    "globalization_indices",
    "group_sums",
    "kemeny_eigen",
    "kemeny_fundamental",
    "kemeny_sensitivity_sweep",
    "load_panel",
    "mixing_time",
    "node_impact",
    "parse_flow_csv",
    "parse_gdp_csv",
    "perturb_node",
    "steady_state",
    "sweep",
    "to_stochastic",
    "validate",
    "write_flow_csv",
]

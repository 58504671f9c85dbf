"""scikit-learn style front ends.

Both estimators take a square flow matrix ``X`` with ``X[i, j]`` the flow
from node ``j`` to node ``i`` (or a :class:`~markov_io.network.FlowNetwork`)
and expose their results as fitted attributes.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .chain import check_ergodicity, to_stochastic
from .errors import DimensionError, InvalidFlow
from .network import FlowNetwork, NodeRef
from .perturb import make_baseline, sweep
from .spectral import kemeny_fundamental, mixing_time, steady_state


def check_flow_matrix(X, year=0) -> FlowNetwork:
    """Validate ``X`` as a square nonnegative flow matrix and wrap it in a network.

    Nodes of a bare matrix are labelled ``NodeRef("X", "<k>")``.
    """
    if isinstance(X, FlowNetwork):
        return X
    X = check_array(X, accept_sparse=("csr", "csc", "coo"), dtype=np.float64)
    if sparse.issparse(X):
        X = X.toarray()
    if X.shape[0] != X.shape[1]:
        raise DimensionError(f"flow matrix must be square, got shape {X.shape}")
    if np.any(X < 0):
        raise InvalidFlow("flow matrix has negative entries")
    nodes = tuple(NodeRef("X", str(k)) for k in range(X.shape[0]))
    return FlowNetwork(year, nodes, X)


class MarkovChainModel(TransformerMixin, BaseEstimator):
    """Fit the column-stochastic chain of a flow matrix.

    Parameters
    ----------
    dangling_policy : {"error", "uniform", "self_loop"}
        Treatment of nodes without outflow.
    tol : float
        L1 tolerance of the steady-state power iteration.
    compute_mixing : bool
        Also estimate the power-iteration mixing time.
    mixing_tol, mixing_runs : float, int
        Settings of the mixing-time estimate.
    random_state : int
        Seed for random starts.

    Attributes
    ----------
    transition_matrix_ : ndarray of shape (n_nodes, n_nodes)
    stationary_distribution_ : ndarray of shape (n_nodes,)
    kemeny_constant_ : float
    ergodicity_ : Ergodicity
    mixing_time_ : MixingTimeEstimate or None
    """

    def __init__(
        self,
        dangling_policy="error",
        tol=1e-10,
        compute_mixing=False,
        mixing_tol=1e-8,
        mixing_runs=20,
        random_state=0,
    ):
        self.dangling_policy = dangling_policy
        self.tol = tol
        self.compute_mixing = compute_mixing
        self.mixing_tol = mixing_tol
        self.mixing_runs = mixing_runs
        self.random_state = random_state

    def fit(self, X, y=None):
        network = check_flow_matrix(X)
        t = to_stochastic(network, self.dangling_policy)
        state = steady_state(t, self.tol, self.random_state)
        self.network_ = network
        self.transition_matrix_ = t.matrix
        self.stationary_distribution_ = state.pi
        self.ergodicity_ = check_ergodicity(t)
        self.kemeny_constant_ = kemeny_fundamental(t, state.pi).value
        self.mixing_time_ = (
            mixing_time(t, self.mixing_tol, self.mixing_runs, self.random_state) if self.compute_mixing else None
        )
        self.n_features_in_ = network.n
        return self

    def transform(self, X):
        """Advance each row of ``X`` (a distribution over nodes) by one step."""
        check_is_fitted(self, "transition_matrix_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(f"X has {X.shape[1]} columns, model has {self.n_features_in_} nodes")
        return X @ self.transition_matrix_.T


class SystemicRiskAnalyzer(TransformerMixin, BaseEstimator):
    """Slow every node in turn and measure who is affected.

    ``transform`` returns one row per node with columns structural power,
    systemic influence, systemic fragility and Kemeny change in percent.

    Parameters
    ----------
    alpha : float
        Activity change in percent, > -100.
    influence_threshold : float
        Relative share change above which a node counts as affected.
    self_loop_scaling : {"once", "twice"}
    compute_kemeny : bool
    dangling_policy : {"error", "uniform", "self_loop"}
    tol : float
    n_jobs : int
        Worker threads for the sweep.
    random_state : int
    """

    feature_names = ("structural_power", "systemic_influence", "systemic_fragility", "kemeny_change_pct")

    def __init__(
        self,
        alpha=-99.0,
        influence_threshold=0.005,
        self_loop_scaling="once",
        compute_kemeny=True,
        dangling_policy="error",
        tol=1e-10,
        n_jobs=1,
        random_state=0,
    ):
        self.alpha = alpha
        self.influence_threshold = influence_threshold
        self.self_loop_scaling = self_loop_scaling
        self.compute_kemeny = compute_kemeny
        self.dangling_policy = dangling_policy
        self.tol = tol
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _sweep(self, network):
        base = make_baseline(network, self.dangling_policy, self.tol, self.random_state, self.compute_kemeny)
        return sweep(
            network,
            alpha=self.alpha,
            influence_threshold=self.influence_threshold,
            self_loop_scaling=self.self_loop_scaling,
            with_kemeny=self.compute_kemeny,
            tolerance=self.tol,
            dangling_policy=self.dangling_policy,
            seed=self.random_state,
            threads=self.n_jobs,
            baseline=base,
        )

    def fit(self, X, y=None):
        network = check_flow_matrix(X)
        result = self._sweep(network)
        self.sweep_ = result
        self.structural_power_ = result.structural_power
        self.systemic_influence_ = result.systemic_influence
        self.systemic_fragility_ = result.systemic_fragility
        self.kemeny_change_pct_ = result.kemeny_change_pct
        self.affected_ = result.affected
        self.failures_ = result.failures
        self.n_features_in_ = network.n
        return self

    def _table(self, result):
        return np.column_stack(
            [result.structural_power, result.systemic_influence, result.systemic_fragility, result.kemeny_change_pct]
        )

    def transform(self, X):
        check_is_fitted(self, "sweep_")
        return self._table(self._sweep(check_flow_matrix(X)))

    def fit_transform(self, X, y=None, **fit_params):
        return self._table(self.fit(X).sweep_)

    def get_feature_names_out(self, input_features=None):
        return np.array(self.feature_names, dtype=object)

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from markov_io import FlowNetwork, apply, check_ergodicity, to_stochastic, validate
from markov_io.chain import StochasticMatrix, dump_matrix_csv
from markov_io.errors import DanglingNode, DimensionError

from conftest import balanced_weights, nodes_for


def net(w):
    w = np.asarray(w, dtype=float)
    return FlowNetwork(2000, nodes_for(w.shape[0]), w)


def test_column_normalisation():
    t = to_stochastic(net([[1, 3], [1, 1]]))
    assert np.array_equal(t.matrix, [[0.5, 0.75], [0.5, 0.25]])
    assert t.year == 2000 and t.dangling_policy == "error"


def test_dangling_policies():
    w = [[1, 0], [1, 0]]
    assert np.array_equal(to_stochastic(net(w), "uniform").matrix[:, 1], [0.5, 0.5])
    assert np.array_equal(to_stochastic(net(w), "self_loop").matrix[:, 1], [0.0, 1.0])
    with pytest.raises(DanglingNode) as info:
        to_stochastic(net(w))
    assert info.value.index == 1
    assert "E-I1" in str(info.value)


def test_tiny_entries_kept():
    t = to_stochastic(net([[1.0, 1.0], [1e-20, 1.0]]))
    assert t.matrix[1, 0] > 0


def test_apply_examples():
    x = np.array([0.3, 0.7])
    assert np.array_equal(apply(np.eye(2), x), x)
    assert np.allclose(apply([[0.5, 0.5], [0.5, 0.5]], [1.0, 0.0]), [0.5, 0.5])
    t = np.array([[0.9, 0.2], [0.1, 0.8]])
    assert np.allclose(apply(t, [2 / 3, 1 / 3]), [2 / 3, 1 / 3], atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(np.eye(2), [1.0, 0.0, 0.0])


def test_ergodicity_examples():
    assert check_ergodicity([[0, 1], [1, 0]]).to_dict() == {"irreducible": True, "aperiodic": False}
    assert check_ergodicity([[0.5, 0.5], [0.5, 0.5]]).ergodic
    block = np.kron(np.eye(2), np.full((2, 2), 0.5))
    assert not check_ergodicity(block).irreducible


def test_period_three_cycle_and_mixed_cycles():
    cycle3 = np.roll(np.eye(3), 1, axis=0)
    assert not check_ergodicity(cycle3).aperiodic
    # cycles of length 2 and 3 through node 0: gcd 1
    t = np.zeros((4, 4))
    t[1, 0] = 0.5
    t[2, 0] = 0.5
    t[3, 2] = 1.0
    t[0, 3] = 1.0
    t[0, 1] = 1.0
    assert check_ergodicity(t).ergodic


def test_periodic_recurrent_class_in_reducible_chain():
    # transient node 0 feeds a 2-cycle {1, 2}
    t = np.array([[0.5, 0, 0], [0.5, 0, 1], [0, 1, 0]])
    erg = check_ergodicity(t)
    assert not erg.irreducible and not erg.aperiodic


def test_stochastic_matrix_rejects_bad_columns():
    with pytest.raises(Exception):
        StochasticMatrix([[0.5, 0.5], [0.4, 0.5]])


def test_dump_matrix_csv():
    buf = io.StringIO()
    dump_matrix_csv(np.array([[0.1, 0.9], [0.9, 0.1]]), buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "0.10000000000000001,0.90000000000000002"
    assert float(rows[1].split(",")[0]) == 0.9


weights = st.integers(2, 30).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.one_of(st.just(0.0), st.floats(1e-6, 1e6)))
).filter(lambda w: np.all(w.sum(axis=0) > 0))


@settings(max_examples=80, deadline=None)
@given(weights, st.floats(1e-3, 1e3))
def test_columns_sum_to_one_and_scale_invariance(w, c):
    t = to_stochastic(net(w)).matrix
    assert np.all(np.abs(t.sum(axis=0) - 1) <= 1e-12)
    assert np.all(t >= 0)
    t_scaled = to_stochastic(net(w * c)).matrix
    assert np.max(np.abs(t - t_scaled)) <= 1e-15


@settings(max_examples=80, deadline=None)
@given(weights, st.integers(0, 2**32 - 1))
def test_apply_conserves_mass(w, seed):
    t = to_stochastic(net(w))
    x = np.random.default_rng(seed).dirichlet(np.ones(t.n))
    y = apply(t, x)
    assert abs(y.sum() - x.sum()) <= 1e-12
    assert np.all(y >= 0)


@pytest.mark.parametrize("seed", range(10))
def test_balanced_network_colsum_is_fixed_point(seed):
    rng = np.random.default_rng(seed)
    w = balanced_weights(int(rng.integers(3, 40)), rng)
    network = net(w)
    assert validate(network).balance_residual < 1e-12
    pi = w.sum(axis=0) / w.sum()
    t = to_stochastic(network).matrix
    assert np.abs(t @ pi - pi).sum() < 1e-10

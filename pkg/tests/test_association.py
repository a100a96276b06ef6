import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cellfree_pm.association import (
    AssociationMap,
    FpcParams,
    associate,
    fpc_power,
    fpc_powers,
    serving_from_served,
)

betas = st.integers(1, 6).flatmap(
    lambda m: st.integers(1, 7).flatmap(
        lambda k: arrays(float, (m, k), elements=st.floats(1e-12, 1.0))
    )
)


def test_top_n_example():
    beta = np.array([[0.5, 0.2, 0.9], [0.1, 0.3, 0.2]])
    assoc = associate(beta, 2)
    assert list(assoc.served[0]) == [2, 0]  # users 3 and 1 in one-based terms
    assert list(assoc.serving[1]) == [1]


def test_full_association():
    beta = np.random.default_rng(0).uniform(size=(3, 4))
    assoc = associate(beta, 4)
    assert all(sorted(s) == [0, 1, 2, 3] for s in assoc.served)
    assert all(list(s) == [0, 1, 2] for s in assoc.serving)


def test_tie_goes_to_lower_index():
    assoc = associate(np.array([[0.9, 0.4, 0.4]]), 2)
    assert list(assoc.served[0]) == [0, 1]


def test_outage_is_reported(caplog):
    with caplog.at_level("WARNING"):
        assoc = associate(np.array([[1.0, 0.1]]), 1)
    assert assoc.outage_users() == [1]
    assert "outage" in caplog.text


def test_bad_counts():
    with pytest.raises(ValueError):
        associate(np.ones((2, 3)), 4)


@given(betas, st.data())
def test_maps_are_dual_and_sorted(beta, data):
    n = data.draw(st.integers(1, beta.shape[1]))
    assoc = associate(beta, n)
    for m, users in enumerate(assoc.served):
        assert len(users) == n
        assert np.all(np.diff(beta[m, users]) <= 0)
        for k in users:
            assert m in assoc.serving[k]
    assert all(
        np.array_equal(a, b) for a, b in zip(serving_from_served(assoc.served, beta.shape[1]), assoc.serving)
    )


@given(betas, st.data())
def test_larger_n_is_superset(beta, data):
    k = beta.shape[1]
    n = data.draw(st.integers(1, k))
    n2 = data.draw(st.integers(n, k))
    small, big = associate(beta, n), associate(beta, n2)
    for a, b in zip(small.served, big.served):
        assert set(a) <= set(b)


def _one_ap(total_beta):
    return np.array([[total_beta]]), (np.array([0]),)


def test_fpc_examples():
    params = FpcParams(p_max_w=0.1, p0_w=1e-4, kappa=0.5)
    beta, serving = _one_ap(1e-8)
    eta, ok = fpc_power(0, beta, serving, params)
    assert ok and eta == pytest.approx(10e-3)
    eta, _ = fpc_power(0, beta, serving, FpcParams(0.1, 1e-4, 0.0))
    assert eta == pytest.approx(1e-4)
    beta, serving = _one_ap(1e-30)
    assert fpc_power(0, beta, serving, params)[0] == pytest.approx(0.1)


def test_fpc_unserved_user_flagged():
    eta, ok = fpc_power(0, np.ones((1, 1)), (np.array([], dtype=int),), FpcParams())
    assert not ok and eta == FpcParams().p_max_w


def test_fpc_units():
    p = FpcParams.from_units(100.0, -10.0, 0.5)
    assert p.p_max_w == pytest.approx(0.1) and p.p0_w == pytest.approx(1e-4)


@given(st.floats(1e-14, 1e-2), st.floats(1.01, 100))
def test_fpc_non_increasing_in_zeta(b, factor):
    params = FpcParams()
    lo = fpc_power(0, np.array([[b]]), (np.array([0]),), params)[0]
    hi = fpc_power(0, np.array([[b * factor]]), (np.array([0]),), params)[0]
    assert hi <= lo * (1 + 1e-12)
    assert 0 < hi <= params.p_max_w


def test_fpc_powers_vector():
    beta = np.array([[1e-6, 1e-9], [1e-7, 1e-10]])
    assoc = associate(beta, 2)
    eta = fpc_powers(beta, assoc)
    assert eta.shape == (2,) and eta[1] >= eta[0]

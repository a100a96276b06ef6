import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellfree_pm.association import associate
from cellfree_pm.uplink import (
    effective_model,
    interference_variance,
    interference_variances,
    realify_matrix,
    realify_vector,
    synth_uplink,
)


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_synth_examples(rng):
    g = np.array([[[1.0, 0.0]]], dtype=complex)
    y = synth_uplink(g, np.array([1.0]), np.array([[1.0 + 0j]]), 0.0, rng)
    np.testing.assert_allclose(y[0, :, 0], [1, 0])
    g = cplx(rng, 2, 3, 4)
    x = cplx(rng, 3, 5)
    noise_only = synth_uplink(g, np.zeros(3), x, 1.0, np.random.default_rng(5))
    np.testing.assert_allclose(noise_only, synth_uplink(g, np.zeros(3), 0 * x, 1.0, np.random.default_rng(5)))


def test_synth_is_linear_in_users(rng):
    g = cplx(rng, 2, 2, 3)
    x = cplx(rng, 2, 4)
    eta = np.array([0.3, 2.0])
    both = synth_uplink(g, eta, x, 0.5, np.random.default_rng(9))
    noise = synth_uplink(g, np.zeros(2), x, 0.5, np.random.default_rng(9))
    first = synth_uplink(g, eta * [1, 0], x, 0.0, rng)
    second = synth_uplink(g, eta * [0, 1], x, 0.0, rng)
    np.testing.assert_allclose(both, first + second + noise, atol=1e-12)


def test_realify_examples():
    np.testing.assert_allclose(realify_vector(np.array([1 + 2j])), [1, 2])
    np.testing.assert_allclose(realify_matrix(np.array([[1j]])), [[0, -1], [1, 0]])


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_realify_preserves_products(n, m, seed):
    rng = np.random.default_rng(seed)
    a, x = cplx(rng, n, m), cplx(rng, m)
    diff = realify_vector(a @ x) - realify_matrix(a) @ realify_vector(x)
    assert np.linalg.norm(diff) <= 1e-12 * max(1.0, np.linalg.norm(a) * np.linalg.norm(x))


def test_variance_examples():
    s2 = interference_variances(
        [[0]], np.array([1.0, 1.0]), np.array([[0.1, 0.0]]), np.array([[0.0, 0.3]]), 1.0, 1
    )
    assert s2[0] == pytest.approx(1.4)
    perfect = interference_variances(
        [[0, 1]], np.array([1.0, 3.0]), np.zeros((1, 2)), np.ones((1, 2)), 0.25, 1
    )
    assert perfect[0] == pytest.approx(0.25)


def test_variance_from_matrices():
    c = np.stack([np.eye(2) * 0.1, np.eye(2) * 0.0])[None].astype(complex)
    r = np.stack([np.eye(2) * 1.0, np.eye(2) * 0.3])[None].astype(complex)
    assoc = associate(np.array([[1.0, 0.3]]), 1)
    assert interference_variance(0, assoc, np.array([1.0, 1.0]), c, r, 1.0) == pytest.approx(1.4)


@given(st.integers(0, 2**31))
def test_serving_a_user_never_raises_variance(seed):
    rng = np.random.default_rng(seed)
    k = 5
    r_tr = rng.uniform(0.5, 2.0, (1, k))
    c_tr = r_tr * rng.uniform(0, 1, (1, k))
    eta = rng.uniform(0, 1, k)
    served = list(rng.choice(k, 2, replace=False))
    extra = [j for j in range(k) if j not in served][0]
    before = interference_variances([served], eta, c_tr, r_tr, 0.1, 1)[0]
    after = interference_variances([served + [extra]], eta, c_tr, r_tr, 0.1, 1)[0]
    assert after <= before + 1e-15 and after >= 0.1


def test_effective_model_examples():
    g_hat = np.array([[1.0, 1j]])
    model = effective_model([0], g_hat, np.array([4.0]), 1.0)
    np.testing.assert_allclose(model.b_complex[:, 0], [2, 2j])
    assert model.b_real.shape == (4, 2)
    real = effective_model([0], np.array([[1.0, -2.0]]), np.array([1.0]), 1.0).b_real
    np.testing.assert_allclose(real[:2, 1], 0)
    np.testing.assert_allclose(real[2:, 0], 0)


def test_effective_model_column_order(rng):
    g_hat = cplx(rng, 4, 3)
    eta = rng.uniform(0.1, 1, 4)
    model = effective_model([3, 1], g_hat, eta, 1.0)
    np.testing.assert_allclose(model.b_complex[:, 0], np.sqrt(eta[3]) * g_hat[3])
    np.testing.assert_allclose(model.b_complex[:, 1], np.sqrt(eta[1]) * g_hat[1])
    with pytest.raises(IndexError):
        effective_model([7], g_hat, eta, 1.0)


def test_residual_identity(rng):
    k, n = 4, 3
    g = cplx(rng, 1, k, n)
    g_hat = g + 0.1 * cplx(rng, 1, k, n)
    eta = rng.uniform(0.1, 1, k)
    x = (rng.choice([-1, 1], (k, 6)) + 1j * rng.choice([-1, 1], (k, 6))) / np.sqrt(2)
    y = synth_uplink(g, eta, x, 0.3, np.random.default_rng(4))[0]
    w = synth_uplink(g, 0 * eta, x, 0.3, np.random.default_rng(4))[0]
    served, other = [2, 0], [1, 3]
    model = effective_model(served, g_hat[0], eta, 1.0)
    lhs = realify_vector(y) - model.b_real @ realify_vector(x[served])
    err = sum(np.sqrt(eta[j]) * np.outer(g[0, j] - g_hat[0, j], x[j]) for j in served)
    out = sum(np.sqrt(eta[j]) * np.outer(g[0, j], x[j]) for j in other)
    np.testing.assert_allclose(lhs, realify_vector(err + out + w), atol=1e-10)

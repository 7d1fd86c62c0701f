import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricreg.gop import (BandwidthSchedule, estimate_gop, finite_diff_gradient, kernel,
                           kernel_regress, kernel_weights)
from metricreg.harness.generators import sample_ball
from metricreg.regressor import Dataset


def grid(step=0.02):
    g = np.arange(-1.0, 1.0 + 1e-12, step)
    return np.array(np.meshgrid(g, g)).reshape(2, -1).T


def brute_regress(X, y, x, eps):
    u = np.linalg.norm(X - x, axis=1) / eps
    k = np.maximum(0.0, 1.0 - u)
    return k @ y / k.sum() if k.sum() > 0 else y.mean()


def test_kernel_values():
    assert kernel(0.0) == 1.0
    assert kernel(1.0) == 0.0
    assert kernel(0.25) == 0.75
    assert kernel(2.0) == 0.0
    assert kernel(0.5, "epanechnikov") == 0.75
    with pytest.raises(ValueError):
        kernel(0.1, "box")


def test_regress_examples():
    one = Dataset([[0.2, 0.1]], [0.7])
    assert kernel_regress(one, [0.2, 0.1], 0.3) == pytest.approx(0.7)
    two = Dataset([[0.9, 0.0], [-0.9, 0.0]], [0.0, 1.0])
    assert kernel_regress(two, [0.0, 0.9], 0.1) == 0.5
    sym = Dataset([[0.1, 0.0], [-0.1, 0.0]], [0.2, 0.8])
    assert kernel_regress(sym, [0.0, 0.0], 0.5) == pytest.approx(0.5)


def test_regress_matches_brute_force():
    rng = np.random.default_rng(0)
    X = sample_ball(rng, 500, 3)
    y = rng.uniform(size=500)
    Q = sample_ball(rng, 200, 3) * 1.1
    data = Dataset(X, y)
    fast = kernel_regress(data, Q, 0.3)
    slow = [brute_regress(X, y, q, 0.3) for q in Q]
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_weights_sum_to_one():
    rng = np.random.default_rng(1)
    data = Dataset(sample_ball(rng, 300, 2), rng.uniform(size=300))
    for q in rng.uniform(-1.5, 1.5, size=(10**4 // 50, 2)):
        w = kernel_weights(data, q, 0.2)
        assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)
        assert w @ data.y == pytest.approx(kernel_regress(data, q, 0.2))


def test_gradient_constant_labels_vanish():
    rng = np.random.default_rng(2)
    data = Dataset(sample_ball(rng, 400, 2), np.full(400, 0.3))
    np.testing.assert_array_equal(finite_diff_gradient(data, [0.1, 0.0], 0.4, 0.1), 0.0)


def test_gradient_mask_saturates_for_tiny_n():
    data = Dataset([[0.0, 0.0], [0.1, 0.0]], [0.0, 1.0])
    assert (2 * 2 / 2) * math.log(4) > 1
    np.testing.assert_array_equal(finite_diff_gradient(data, [0.05, 0.0], 1.0, 0.05), 0.0)


def test_gradient_linear_grid():
    X = grid()
    w = np.array([0.3, -0.2])
    data = Dataset(X, 0.5 + X @ w)
    rng = np.random.default_rng(3)
    for x in rng.uniform(-0.5, 0.5, size=(25, 2)):
        g = finite_diff_gradient(data, x, 0.2, 0.1)
        assert np.all(g != 0)
        np.testing.assert_allclose(g, w, atol=0.05)


def test_gradient_matches_brute_force():
    rng = np.random.default_rng(4)
    X = sample_ball(rng, 600, 2)
    y = 0.5 + 0.3 * np.sin(2 * X[:, 0])
    data = Dataset(X, y)
    eps, tau = 0.4, 0.1
    thr = (2 * 2 / 600) * math.log(1200)
    for x in sample_ball(rng, 20, 2) * 0.8:
        g = finite_diff_gradient(data, x, eps, tau)
        for i in range(2):
            e = np.eye(2)[i] * tau
            masses = [np.mean(np.linalg.norm(X - (x + s * e), axis=1) <= eps / 2) for s in (1, -1)]
            want = (brute_regress(X, y, x + e, eps) - brute_regress(X, y, x - e, eps)) / (2 * tau)
            assert g[i] == pytest.approx(want if min(masses) >= thr else 0.0, abs=1e-12)


def test_gop_constant_labels_zero():
    rng = np.random.default_rng(5)
    est = estimate_gop(Dataset(sample_ball(rng, 500, 3), np.full(500, 0.6)))
    np.testing.assert_array_equal(est.matrix, 0.0)


def test_gop_one_dimensional_identity_slope():
    n = 4001
    x = np.linspace(-1, 1, n)[:, None]
    # the default schedule oversmooths at d = 1 (its log factor is squared),
    # so pin eps_n = 0.03 and tau_n = 0.02 directly
    sched = BandwidthSchedule(c_eps=0.03 / (math.log(n + 1) ** 2 * n ** -0.25), c_lo=0.0,
                              c_tau=0.02 / 0.03**0.25)
    est = estimate_gop(Dataset(x, x[:, 0]), sched)
    assert est.eps == pytest.approx(0.03) and est.tau == pytest.approx(0.02)
    assert est.matrix[0, 0] == pytest.approx(1.0, abs=0.1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(20, 400))
def test_gop_symmetric_psd(seed, d, n):
    rng = np.random.default_rng(seed)
    data = Dataset(sample_ball(rng, n, d), rng.uniform(size=n))
    est = estimate_gop(data)
    np.testing.assert_array_equal(est.matrix, est.matrix.T)
    assert np.linalg.eigvalsh(est.matrix).min() >= -1e-10
    assert 0.0 <= est.mask_rate <= 1.0


def test_schedule_shape():
    s = BandwidthSchedule()
    eps = [s.eps(2**k, 3) for k in range(8, 15)]
    assert all(a > b for a, b in zip(eps, eps[1:]))
    assert all(s.tau(2**k, 3) < s.tau0 for k in range(8, 15))
    assert BandwidthSchedule(c_lo=0.0).eps(100, 2) == pytest.approx(
        math.log(101) * 100 ** (-1 / 6) * 0.4)


def test_gop_norm_bounded_by_largest_gradient():
    rng = np.random.default_rng(6)
    X = sample_ball(rng, 2000, 3)
    data = Dataset(X, 0.5 + 0.3 * np.tanh(2 * X[:, 1]) + 0.05 * rng.standard_normal(2000))
    est = estimate_gop(data, keep_gradients=True)
    assert np.linalg.norm(est.matrix, 2) <= est.grad_max**2 + 1e-12
    np.testing.assert_allclose(est.matrix, est.gradients.T @ est.gradients / 2000, atol=1e-15)

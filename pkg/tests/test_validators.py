import math

import numpy as np
import pytest

from metricreg.harness import validators as val
from metricreg.harness.generators import Link, sample_ball, substream
from metricreg.linalg import Metric, spectral_normalize
from metricreg.regressor import OnlineRegressor


def rng(k=0):
    return substream(123, 7, k)


def test_packing_single_example():
    reg = OnlineRegressor(Metric.identity(2))
    reg.step([0.2, 0.2], 0.5)
    rep = val.validate_packing_bound(reg)
    assert rep.n_centers == 1 and rep.bound >= 8 * math.sqrt(2) and rep.passed


@pytest.mark.parametrize("grid", [False, True])
def test_packing_identity_d2(grid):
    reg = OnlineRegressor(Metric.identity(2))
    X = val.grid_stream(2, 4096) if grid else sample_ball(rng(1), 4096, 2)
    for x in X:
        reg.step(x, 0.5)
    rep = val.validate_packing_bound(reg)
    assert rep.passed and rep.packing_property and rep.rounds == 4096


def test_packing_bound_formula():
    b, s = val.packing_bound([1.0, 0.04], 0.5)
    assert s == 1 and b == pytest.approx(16 * math.sqrt(2))
    b, s = val.packing_bound([1.0, 0.25], 0.5)
    assert s == 2 and b == pytest.approx((16 * math.sqrt(2)) ** 2 * 0.5)


def test_grid_stream_inside_ball():
    X = val.grid_stream(3, 1000)
    assert X.shape == (1000, 3) and np.all(np.linalg.norm(X, axis=1) <= 1.0)


def test_lipschitz_constant_function():
    rep = val.validate_lipschitz(Metric.identity(2), val.AffineFunction(np.zeros(2), 0.3), rng(2))
    assert rep.lipschitz == 0.0 and rep.max_ratio == 0.0 and rep.passed


def test_lipschitz_affine_identity_is_cauchy_schwarz():
    w = np.array([0.3, -0.4])
    rep = val.validate_lipschitz(Metric.identity(2), val.AffineFunction(w), rng(3))
    assert rep.lipschitz == pytest.approx(0.5)
    assert rep.passed and rep.aligned_max_ratio == pytest.approx(1.0, rel=1e-9)


def test_lipschitz_affine_diag_metric_tight():
    lam = 0.2
    m = spectral_normalize(np.diag([1.0, lam]))
    rep = val.validate_lipschitz(m, val.AffineFunction([0.0, 1.0]), rng(4))
    assert rep.lipschitz == pytest.approx(math.sqrt(1 / lam))
    assert rep.passed and rep.aligned_max_ratio >= 0.99


@pytest.mark.parametrize("k", range(6))
def test_lipschitz_random(k):
    r = rng(10 + k)
    d = 2 + k % 3
    metric = val.random_metric(r, d)
    fns = [val.QuadraticFunction(np.diag(r.standard_normal(d)), r.standard_normal(d)),
           val.SingleIndexFunction(r.standard_normal(d), Link("sine", scale=3.0))]
    for fn in fns:
        rep = val.validate_lipschitz(metric, fn, r, n_pairs=2000)
        assert rep.passed and rep.max_ratio <= 1.0 + 1e-9


def test_volumetric_diameter_case():
    rep = val.validate_volumetric_bound(Metric.identity(2), 2.5, rng(5), proposals=2000,
                                        mc_samples=20000)
    assert rep.packing_size == 1 and rep.bound >= 1 and rep.passed


def test_volumetric_exact_interval():
    rep = val.validate_volumetric_bound(Metric.identity(1), 0.5, rng(6), proposals=20000)
    assert rep.method == "exact" and rep.exact_max_packing == 4 and rep.bound == 5.0
    assert rep.packing_size <= 4 and rep.passed


def test_volumetric_diag_metric():
    m = spectral_normalize(np.diag([1.0, 0.25]))
    rep = val.validate_volumetric_bound(m, 0.25, rng(7), proposals=20000, mc_samples=200000)
    assert rep.passed
    assert rep.denominator_volume == pytest.approx(rep.denominator_exact,
                                                   abs=4 * rep.denominator_se)


def test_volumetric_rejects_high_dim():
    with pytest.raises(ValueError):
        val.validate_volumetric_bound(Metric.identity(4), 0.5, rng(8))


def test_greedy_packing_is_a_packing():
    m = val.random_metric(rng(9), 2)
    P = val.greedy_packing(m, 0.3, rng(9), proposals=5000)
    Z = P @ m.transform.T
    D = np.linalg.norm(Z[:, None] - Z[None], axis=-1) + np.eye(len(Z)) * 10
    assert D.min() > 0.3


def test_dist_to_unit_ball():
    lam = np.array([1.0, 0.25])
    P = np.array([[2.0, 0.0], [0.0, 3.0], [0.1, 0.1]])
    dist = val._dist_to_unit_ball(P, lam, np.eye(2))
    np.testing.assert_allclose(dist, [1.0, 1.0, 0.0], atol=1e-9)


def test_monotone_map_examples():
    rep = val.monotone_map_grid(0.5, 0.5, 3, t_max=100)
    assert rep.passed and rep.T0 == 16 and rep.grid_points == 9901
    for mu, a, d in val.random_monotone_triples(rng(11), 10):
        assert val.monotone_map_grid(mu, a, d, t_max=200).passed


def test_sandwich():
    G = np.diag([0.2, 0.0])
    rep = val.eigenvalue_sandwich(G, G + 0.01 * np.eye(2), 0.05)
    assert rep.premise_holds and rep.passed
    rep = val.eigenvalue_sandwich(G, np.diag([0.5, 0.0]), 0.05)
    assert not rep.premise_holds and not rep.checked and rep.passed


def test_random_metric_condition():
    for k in range(20):
        m = val.random_metric(rng(12 + k), 3)
        assert m.eigenvalues[0] == 1.0 and m.eigenvalues[-1] >= 0.01 - 1e-12
    assert isinstance(val.validate_packing_bound(OnlineRegressor(Metric.identity(1))).to_dict(),
                      dict)

import json

import numpy as np
import pytest
from scipy import stats

from metricreg.errors import SpecError
from metricreg.harness.generators import GeneratorSpec, Link, generate, oracle_for, sample_ball, substream
from metricreg.linalg import Metric


def test_constant_kind():
    data, oracle = generate(GeneratorSpec(kind="constant", dim=3, noise_sd=0.0, constant=0.3), 50)
    np.testing.assert_array_equal(data.y, 0.3)
    np.testing.assert_array_equal(oracle.G, 0.0)
    np.testing.assert_array_equal(oracle.grad(data.X), 0.0)


def test_affine_single_index_closed_form():
    spec = GeneratorSpec(dim=2, projector=((1.0, 0.0),), link=Link("affine", slope=0.2),
                         noise_sd=0.0)
    data, oracle = generate(spec, 100)
    np.testing.assert_allclose(data.y, 0.5 + 0.2 * data.X[:, 0], atol=1e-15)
    np.testing.assert_allclose(oracle.G, np.diag([0.04, 0.0]), atol=1e-15)
    assert oracle.G_method == "closed_form"


def test_determinism_and_seed_sensitivity():
    for kind in ("single_index", "multi_index", "additive"):
        spec = GeneratorSpec(kind=kind, dim=4, k=2 if kind == "multi_index" else 1, seed=11)
        a, _ = generate(spec, 200, with_oracle=False)
        b, _ = generate(spec, 200, with_oracle=False)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
    c, _ = generate(GeneratorSpec(seed=12), 200, with_oracle=False)
    assert not np.array_equal(c.X, a.X[:, :3])


def test_uniform_ball_marginal():
    for d in (1, 3, 5):
        X = sample_ball(substream(0, 99, d), 10**5, d)
        assert np.all(np.linalg.norm(X, axis=1) <= 1.0)
        ks = stats.kstest(np.linalg.norm(X, axis=1) ** d, "uniform").statistic
        assert ks < 0.02


def test_labels_and_noise_range():
    data, oracle = generate(GeneratorSpec(dim=3, noise_sd=0.05, seed=2), 5000)
    assert data.y.min() >= 0 and data.y.max() <= 1
    resid = data.y - oracle.f0(data.X)
    assert np.abs(resid).max() <= 3 * 0.05 + 1e-12
    assert resid.std() == pytest.approx(0.05, rel=0.1)


def test_quadrature_gop_matches_monte_carlo():
    spec = GeneratorSpec(dim=3, seed=5)
    oracle = oracle_for(spec)
    assert oracle.G_method == "quadrature"
    P = sample_ball(substream(1, 98), 400000, 3)
    g = oracle.grad(P)
    np.testing.assert_allclose(oracle.G, g.T @ g / len(P), atol=2e-3)
    b = oracle.projector[0]
    np.testing.assert_allclose(oracle.G, oracle.G[0, 0] / b[0] ** 2 * np.outer(b, b), atol=1e-12)


def test_multi_index_gop_rank():
    oracle = oracle_for(GeneratorSpec(kind="multi_index", dim=4, k=2, seed=1))
    w = np.linalg.eigvalsh(oracle.G)[::-1]
    assert w[1] > 1e-3 and w[2] < 1e-3 and oracle.G_se < 1e-3


def test_projector_checks():
    with pytest.raises(SpecError):
        GeneratorSpec(dim=2, projector=((1.0, 1.0),)).projector_matrix()
    with pytest.raises(SpecError):
        GeneratorSpec(dim=2, k=3)
    with pytest.raises(SpecError):
        Link("affine", slope=0.5)
    with pytest.raises(SpecError):
        GeneratorSpec(kind="spiral")
    B = GeneratorSpec(dim=5, k=2, kind="multi_index", seed=3).projector_matrix()
    np.testing.assert_allclose(B @ B.T, np.eye(2), atol=1e-12)


def test_spec_roundtrip_and_parse(tmp_path):
    spec = GeneratorSpec(dim=2, projector=((0.6, 0.8),), link=Link("sine", scale=2.0), seed=9)
    again = GeneratorSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec
    p = tmp_path / "g.json"
    p.write_text(json.dumps(spec.to_dict()))
    assert GeneratorSpec.parse(str(p)) == spec
    assert GeneratorSpec.parse("additive").kind == "additive"
    assert GeneratorSpec.parse('{"dim": 4, "link": "affine"}').link.name == "affine"


def test_sup_norms_and_lipschitz():
    spec = GeneratorSpec(dim=3, projector=((0.0, 0.0, 1.0),), link=Link("sigmoid", scale=4.0))
    oracle = oracle_for(spec)
    s, method = oracle.sup_norms(np.eye(3))
    np.testing.assert_allclose(s, [0, 0, 0.8])
    assert method == "closed_form"
    assert oracle.lipschitz_in_metric(Metric.identity(3)) == pytest.approx(0.8)
    add = oracle_for(GeneratorSpec(kind="additive", dim=2, link=Link("sine", scale=1.0)))
    # d/dx_1 of mean(0.5 + 0.4 sin x_i) peaks at 0.2 where x_1 = 0
    assert add.sup_norm(np.array([1.0, 0.0]))[0] == pytest.approx(0.2, abs=1e-6)

import numpy as np
import pytest

import acvae

SMALL = dict(latent_dim=3, hidden_encoder=8, hidden_corr=8, epochs=6, eval_every=2, gamma=5)


@pytest.fixture(scope="module")
def data():
    ds = acvae.generate_synthetic(n_vertices=40, n_clusters=2, vocab_size=30, words_per_vertex=12, seed=5)
    x = acvae.tfidf(ds["features"])
    train, test = acvae.split_edges(ds["n_vertices"], ds["edges"], seed=1)
    return ds, x, train, test


def test_generator_and_tfidf(data):
    ds, x, train, test = data
    assert x.shape == ds["features"].shape
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
    assert len(train) + len(test) == len(ds["edges"])
    assert len(ds["clusters"]) == ds["n_vertices"]


def test_uniform_weights_triangle():
    w = acvae.uniform_mas_weights(3, np.array([[0, 1], [1, 2], [0, 2]]))
    assert np.allclose(w, 2 / 3)


def test_train_eval_round_trip(data, tmp_path):
    ds, x, train, test = data
    model = acvae.train(x, train, test, dict(SMALL, mode="acvae_saddle"))
    assert model.mode == "acvae_saddle"
    assert len(model.log) == 3
    assert all(0.0 <= w <= 1.0 for w in model.weights)

    dist = model.distances()
    report = acvae.ncrr(dist, ds["n_vertices"], train, test)
    best = [r for r in model.log if r["accepted"]][-1]
    assert report["mean_ncrr"] == pytest.approx(best["test_ncrr"], abs=1e-12)

    unrefined = acvae.ncrr(model.distances(refine=False), ds["n_vertices"], train, test)
    assert unrefined["mean_ncrr"] == pytest.approx(best["test_ncrr_unrefined"], abs=1e-12)

    path = tmp_path / "model.ckpt"
    model.save(str(path))
    loaded = acvae.load(str(path), x, ds["n_vertices"], train)
    assert np.array_equal(loaded.distances(), dist)
    means, stds = loaded.embeddings()
    assert means.shape == (ds["n_vertices"], 3)
    assert (stds > 0).all()
    assert loaded.forest_edges().shape[1] == 2


def test_training_is_deterministic(data):
    ds, x, train, test = data
    a = acvae.train(x, train, test, dict(SMALL, mode="cvae_corr"))
    b = acvae.train(x, train, test, dict(SMALL, mode="cvae_corr"))
    assert [r["train_objective"] for r in a.log] == [r["train_objective"] for r in b.log]


def test_bad_config_raises(data):
    ds, x, train, test = data
    with pytest.raises(ValueError):
        acvae.train(x, train, test, {"mode": "nonsense"})
    with pytest.raises(ValueError):
        acvae.train(x, train, test, {"no_such_key": 1})


@pytest.mark.parametrize("suite", ["forest", "objective", "ncrr"])
def test_oracles(suite):
    checks = acvae.run_oracle(suite, n_cases=10)
    assert checks and all(c["passed"] for c in checks)

import json

import numpy as np
import pytest

import sic_cluster as sic


def test_embeddings_round_trip(tmp_path):
    a = np.array([[3.0, 4.0], [1.0, 0.0]], dtype=np.float32)
    sic.write_embeddings(str(tmp_path / "m.emb"), a)
    np.testing.assert_array_equal(sic.read_embeddings(str(tmp_path / "m.emb")), a)
    with pytest.raises(sic.ConfigError):
        sic.read_embeddings(str(tmp_path / "missing.emb"))


def test_metrics_and_bounds():
    m = sic.evaluate(np.array([0, 0, 1, 1]), np.array([1, 1, 0, 0]))
    assert m["acc"] == 1.0
    assert sic.evaluate(np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))["nmi"] == pytest.approx(0.0, abs=1e-12)
    c1, _ = sic.bound_constants(0.5, 1.0, 1, 0.0, 0.0, 3)
    assert c1 == 4.0
    assert sic.bound_gap(4.0, 2.0, 200) < sic.bound_gap(4.0, 2.0, 100)
    t = np.arange(1, 101, dtype=float)
    assert sic.convergence_slope(list(t ** -0.5)) == pytest.approx(-0.5, abs=1e-6)


def test_knn_and_kmeans():
    pts = np.array([[1, 0], [0.9806, 0.1961], [0, 1]], dtype=np.float32)
    assert sic.knn(pts, 1).ravel().tolist() == [1, 0, 1]
    centers, labels, inertia = sic.kmeans(np.array([[0, 0], [0, 1], [10, 0], [10, 1]], dtype=np.float32), 2)
    assert inertia == pytest.approx(1.0)
    assert labels[0] == labels[1] != labels[2]


def test_train_on_synthetic_data():
    data = sic.synth(c=3, seed=7)
    nouns, emb = sic.filter_nouns(data["nouns"], data["noun_embeddings"], data["images"], 3)
    assert "object" not in nouns
    out = sic.train(data["images"], nouns, emb, 3, labels=data["labels"], epochs=20, seed=7)
    assert len(out["trace"]) == 20
    assert sic.evaluate(out["labels"], data["labels"])["acc"] >= 0.95
    again = sic.predict(out["weight"], out["bias"], data["images"])
    np.testing.assert_array_equal(again, out["labels"])
    with pytest.raises(sic.ConfigError):
        sic.train(data["images"], nouns, emb, 3, epochs=0)


def test_cli_in_process(tmp_path):
    assert sic.run_cli(["synth", "-c", "3", "--seed", "1", "-o", str(tmp_path)]) == 0
    assert sic.run_cli(["baseline-kmeans", "--images", str(tmp_path / "images.emb"), "--labels",
                        str(tmp_path / "labels.json"), "-c", "3", "-o", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "metrics.json").read_text())["acc"] >= 0.95
    assert sic.run_cli(["train", "--lambda", "-1"]) == 2

import json

import numpy as np
import pytest

import click2state as c2s

SMALL = {
    "seed": 2,
    "synth": {"n_students": 80, "term_length": 4, "vocab_size": 60, "n_topics_planted": 3},
    "lda": {"num_topics": 3, "iters": 10, "infer_iters": 10},
    "train": {"epochs": 2, "hidden": 4},
    "weeks": [4],
    "hidden_sizes": [4],
    "bootstrap_samples": 20,
}


def test_auc_matches_pair_count():
    scores = [0.1, 0.4, 0.4, 0.9]
    labels = [0, 0, 1, 1]
    assert c2s.auc(scores, labels) == pytest.approx((1 + 0.5 + 1 + 1) / 4)


def test_auc_needs_both_labels():
    with pytest.raises(ValueError):
        c2s.auc([0.1, 0.2], [1, 1])


def test_kld_and_bce():
    theta = np.array([0.2, 0.3, 0.5])
    assert c2s.kld(theta, theta) == 0.0
    assert c2s.kld(theta, np.array([0.5, 0.3, 0.2])) > 0.0
    assert c2s.bce(1, 0.5) == pytest.approx(np.log(2.0))


def test_generate_is_deterministic():
    cfg = json.dumps({"n_students": 20, "term_length": 3, "seed": 4})
    text = c2s.generate_jsonl(cfg)
    assert text == c2s.generate_jsonl(cfg)
    assert len(text.splitlines()) == 20


def test_model_forward_shapes():
    model = c2s.init_model(5, 3, seed=1)
    p, states, topics = model.forward(np.random.default_rng(0).uniform(size=(6, c2s.FEATURE_DIM)))
    assert 0.0 < p < 1.0
    assert states.shape == (6, 5)
    assert topics.shape == (6, 3)
    assert np.allclose(topics.sum(axis=1), 1.0)
    assert model.fail_prob(states[-1]) == pytest.approx(p)


def test_pipeline_round(tmp_path):
    cfg = json.dumps(SMALL)
    data = c2s.synth(cfg, tmp_path / "data")
    assert any(f.endswith("students.jsonl") for f in data)
    assert c2s.dataset_summary(tmp_path / "data" / "students.jsonl")["n_students"] == 80
    c2s.lda(cfg, tmp_path / "data" / "students.jsonl", tmp_path / "lda")
    tm = tmp_path / "lda" / "topic_model.json"
    ckpts = c2s.train(cfg, tmp_path / "data" / "students.jsonl", tm, tmp_path / "train")
    assert any("click2state_w04_h4" in f for f in ckpts)
    out = c2s.evaluate(cfg, tmp_path / "train" / "checkpoints", tmp_path / "data" / "students.jsonl", tm,
                       tmp_path / "eval")
    metrics = [f for f in out if f.endswith("metrics.csv")][0]
    lines = open(metrics).read().splitlines()
    assert len(lines) == 2
    model = c2s.Model.load(tmp_path / "train" / "checkpoints" / "click2state_w04_h4.json")
    assert model.hidden == 4 and model.week_cutoff == 4
    files = c2s.analyze(cfg, tmp_path / "train" / "checkpoints" / "click2state_w04_h4.json",
                        tmp_path / "data" / "students.jsonl", tmp_path / "analyze")
    assert len(files) == 3


def test_bad_config_is_value_error():
    with pytest.raises(ValueError):
        c2s.generate_jsonl(json.dumps({"fail_rate": 2.0}))

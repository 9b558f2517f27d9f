import json

import numpy as np
import pytest

from trusteq.backends import (
    AdditiveBackend,
    TrainConfig,
    purity_probe,
    train_bow_logistic,
)
from trusteq.core import Dataset, Instance
from trusteq.errors import DegenerateDataset


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def make_dataset(rows, num_classes=2, names=("no", "yes")):
    return Dataset(
        name="toy",
        num_classes=num_classes,
        class_names=tuple(names),
        instances=tuple(
            Instance(id=str(i), text_a=t, label=y) for i, (t, y) in enumerate(rows)
        ),
    )


def test_additive_logistic_probs():
    backend = AdditiveBackend(weights={"good": 2.0, "bad": -2.0}, bias=0.0,
                              link="logistic")
    probs = backend.predict_proba([("good", None)])
    assert probs[0] == pytest.approx([sigmoid(-2.0), sigmoid(2.0)], abs=1e-9)
    assert probs[0] == pytest.approx([0.1192, 0.8808], abs=1e-4)


def test_additive_empty_text():
    backend = AdditiveBackend(weights={"good": 2.0}, bias=0.0, link="logistic")
    assert backend.predict_proba([("", None)])[0] == pytest.approx([0.5, 0.5])


def test_additive_word_presence_is_set_based():
    backend = AdditiveBackend(weights={"a": 1.0}, bias=0.0, link="identity")
    once = backend.score(("a", None))
    twice = backend.score(("a a", None))
    assert once == twice == 1.0


def test_additive_marginal_gain_matches_weight():
    # identity link: adding word i to any coalition moves the score by w[i]
    weights = {"a": 0.3, "b": -0.2, "c": 0.7}
    backend = AdditiveBackend(weights=weights, bias=0.1, link="identity")
    for base in ["", "a", "b c", "a b"]:
        without = backend.score((base, None))
        with_c = backend.score((base + " c" if "c" not in base else base, None))
        if "c" not in base:
            assert with_c - without == pytest.approx(weights["c"], abs=1e-12)


def test_probability_invariants():
    backend = AdditiveBackend(weights={"x": 5.0, "y": -3.0}, link="logistic")
    probs = backend.predict_proba([("x y", None), ("x", None), ("", None)])
    assert probs.shape == (3, 2)
    assert np.all(probs >= 0) and np.all(probs <= 1)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)


def test_batch_singleton_equivalence():
    backend = AdditiveBackend(weights={"x": 1.0, "y": 2.0}, link="logistic")
    texts = [("x", None), ("y", None), ("x y", None)]
    batched = backend.predict_proba(texts)
    singles = np.vstack([backend.predict_proba([t]) for t in texts])
    assert np.array_equal(batched, singles)


def test_train_separable_reaches_full_accuracy():
    ds = make_dataset([
        ("good fine", 1), ("good nice", 1), ("bad poor", 0), ("bad sad", 0),
    ])
    model = train_bow_logistic(ds, TrainConfig(epochs=300, seed=1))
    probs = model.predict_proba([(i.text_a, None) for i in ds.instances])
    preds = probs.argmax(axis=1)
    assert np.array_equal(preds, [1, 1, 0, 0])


def test_train_vocab_cap():
    ds = make_dataset([
        ("good fine really quite", 1), ("bad poor very much", 0),
        ("good nice", 1), ("bad sad", 0),
    ])
    full = train_bow_logistic(ds, TrainConfig(seed=0))
    capped = train_bow_logistic(ds, TrainConfig(seed=0, vocab_cap=3))
    assert len(capped.vocab) == 3 < len(full.vocab)
    assert full.num_classes == capped.num_classes == 2


def test_train_deterministic():
    ds = make_dataset([("good", 1), ("bad", 0), ("fine good", 1), ("poor bad", 0)])
    m1 = train_bow_logistic(ds, TrainConfig(seed=5))
    m2 = train_bow_logistic(ds, TrainConfig(seed=5))
    assert np.array_equal(m1.weights, m2.weights)


def test_train_degenerate():
    with pytest.raises(DegenerateDataset):
        train_bow_logistic(make_dataset([]), TrainConfig())
    with pytest.raises(DegenerateDataset):
        train_bow_logistic(make_dataset([("a", 1), ("b", 1)]), TrainConfig())


def test_bow_handles_empty_text():
    ds = make_dataset([("good", 1), ("bad", 0), ("fine good", 1), ("poor bad", 0)])
    model = train_bow_logistic(ds, TrainConfig(seed=0))
    probs = model.predict_proba([("", None)])
    assert probs[0].sum() == pytest.approx(1.0, abs=1e-9)


def test_purity_probe_passes_on_pure_backend():
    backend = AdditiveBackend(weights={"x": 1.0}, link="logistic")
    purity_probe(backend, [("x", None), ("", None)])

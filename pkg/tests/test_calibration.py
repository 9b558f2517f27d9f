import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trusteq.calibration import (
    N_BINS,
    PredictionRecord,
    bin_index,
    brier,
    bucket,
    calibration_report,
    ece,
    mce,
    reliability_points,
)
from trusteq.errors import EmptyInput


def record(confidence, correct, instance_id="r"):
    # two-class record with the requested confidence and correctness
    probs = (confidence, 1.0 - confidence)
    label = 0 if correct else 1
    return PredictionRecord(instance_id, probs, label)


@pytest.fixture
def four_record_fixture():
    # 3 correct @ conf 0.8, 1 wrong @ conf 0.6
    return [record(0.8, True), record(0.8, True), record(0.8, True),
            record(0.6, False)]


def test_record_derived_fields():
    rec = PredictionRecord("x", (0.1, 0.7, 0.2), 2)
    assert rec.predicted == 1
    assert rec.confidence == 0.7
    assert not rec.correct
    assert rec.p_true == 0.2


def test_bucket_counts_and_percents():
    recs = [record(0.95, True), record(0.92, True), record(0.55, True)]
    stats = bucket(recs)
    assert stats.counts[5] == 1 and stats.counts[9] == 2
    assert stats.percents[5] == pytest.approx(100 / 3)
    assert stats.percents[9] == pytest.approx(200 / 3)
    assert sum(stats.counts) == 3
    assert sum(stats.percents) == pytest.approx(100.0, abs=1e-9)


def test_confidence_one_lands_in_last_bin():
    assert bin_index(1.0) == N_BINS - 1
    stats = bucket([record(1.0, True)])
    assert stats.counts[9] == 1


def test_bin_edges_half_open():
    assert bin_index(0.9) == 9
    assert bin_index(0.8999999) == 8


def test_bucket_empty_raises():
    with pytest.raises(EmptyInput):
        bucket([])


def test_ece_fixture(four_record_fixture):
    stats = bucket(four_record_fixture)
    # (3*|1.0-0.8| + 1*|0.0-0.6|) / 4
    assert ece(stats) == pytest.approx(0.30, abs=1e-12)


def test_mce_fixture(four_record_fixture):
    assert mce(bucket(four_record_fixture)) == pytest.approx(0.60, abs=1e-12)


def test_perfectly_confident_and_correct():
    recs = [record(1.0, True) for _ in range(10)]
    stats = bucket(recs)
    assert ece(stats) == 0.0
    assert mce(stats) == 0.0


def test_brier_paper_variant():
    recs = [PredictionRecord("a", (1.0, 0.0), 0),
            PredictionRecord("b", (0.5, 0.5), 0)]
    assert brier(recs) == pytest.approx(0.125, abs=1e-12)
    assert brier([PredictionRecord("a", (1.0, 0.0), 0)]) == 0.0


def test_brier_multiclass_variant():
    recs = [PredictionRecord("a", (0.5, 0.5), 0)]
    assert brier(recs, multiclass=True) == pytest.approx(0.5, abs=1e-12)
    assert brier(recs) == pytest.approx(0.25, abs=1e-12)


def test_reliability_points(four_record_fixture):
    points = reliability_points(bucket(four_record_fixture))
    assert points == [(pytest.approx(0.6), 0.0, 1), (pytest.approx(0.8), 1.0, 3)]


def test_perfect_calibration_set():
    # in each bin, accuracy equals mean confidence by construction
    recs = []
    for conf, n in ((0.6, 10), (0.8, 20)):
        correct = int(round(conf * n))
        recs += [record(conf, True, f"c{conf}-{i}") for i in range(correct)]
        recs += [record(conf, False, f"w{conf}-{i}") for i in range(n - correct)]
    stats = bucket(recs)
    assert ece(stats) <= 1e-9
    assert mce(stats) <= 1e-9
    for conf, acc, _ in reliability_points(stats):
        assert acc == pytest.approx(conf, abs=1e-9)


@settings(max_examples=300)
@given(st.lists(
    st.tuples(st.floats(0.5, 1.0, allow_nan=False), st.booleans()),
    min_size=1, max_size=50,
))
def test_mce_dominates_ece(items):
    recs = [record(c, ok, f"r{i}") for i, (c, ok) in enumerate(items)]
    stats = bucket(recs)
    assert mce(stats) >= ece(stats) - 1e-12
    assert 0.0 <= ece(stats) <= 1.0
    assert 0.0 <= mce(stats) <= 1.0


@given(st.lists(
    st.tuples(st.floats(0.5, 1.0, allow_nan=False), st.booleans()),
    min_size=2, max_size=30,
), st.randoms())
def test_permutation_invariance(items, pyrandom):
    recs = [record(c, ok, f"r{i}") for i, (c, ok) in enumerate(items)]
    shuffled = list(recs)
    pyrandom.shuffle(shuffled)
    s1, s2 = bucket(recs), bucket(shuffled)
    assert s1.counts == s2.counts
    assert ece(s1) == pytest.approx(ece(s2), abs=1e-12)
    assert mce(s1) == pytest.approx(mce(s2), abs=1e-12)
    assert brier(recs) == pytest.approx(brier(shuffled), abs=1e-12)


def test_average_confidence_consistency():
    recs = [record(0.95, True), record(0.62, False), record(0.74, True)]
    rep = calibration_report("m", recs)
    direct = 100.0 * np.mean([r.confidence for r in recs])
    assert rep.average_confidence == pytest.approx(direct, abs=1e-12)
    binwise = sum(
        n * c for n, c in zip(rep.bins.counts, rep.bins.mean_confidence) if n
    ) / rep.bins.total
    assert rep.average_confidence == pytest.approx(100 * binwise, abs=1e-9)
    assert rep.ece <= rep.mce

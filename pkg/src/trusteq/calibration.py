"""Confidence bucketing, ECE / MCE / Brier, and reliability-diagram points.

Ten fixed-width confidence bins (0.0-0.1 ... 0.9-1.0, last bin closed at
1.0). Bin error compares each bin's empirical accuracy with the mean
confidence of its members, never the bin midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput

N_BINS = 10
BIN_EDGES = [i / 10 for i in range(N_BINS + 1)]


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    probs: tuple[float, ...]
    label: int

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def confidence(self) -> float:
        return float(max(self.probs))

    @property
    def correct(self) -> bool:
        return self.predicted == self.label

    @property
    def p_true(self) -> float:
        return float(self.probs[self.label])


@dataclass
class BinStats:
    counts: list[int]  # length N_BINS
    percents: list[float]
    mean_confidence: list[float]  # nan for empty bins
    accuracy: list[float]  # nan for empty bins
    total: int

    def to_json_dict(self) -> dict:
        def clean(xs):
            return [None if np.isnan(x) else float(x) for x in xs]

        return {
            "edges": BIN_EDGES,
            "counts": self.counts,
            "percents": [float(p) for p in self.percents],
            "mean_confidence": clean(self.mean_confidence),
            "accuracy": clean(self.accuracy),
            "total": self.total,
        }


@dataclass
class CalibrationReport:
    model_name: str
    bins: BinStats
    average_confidence: float  # percent
    ece: float
    mce: float
    brier: float
    reliability_points: list[tuple[float, float, int]]  # (conf, acc, count)

    def to_json_dict(self) -> dict:
        return {
            "model": self.model_name,
            "bins": self.bins.to_json_dict(),
            "average_confidence": self.average_confidence,
            "ece": self.ece,
            "mce": self.mce,
            "brier": self.brier,
            "reliability_points": [
                {"confidence": c, "accuracy": a, "count": n}
                for c, a, n in self.reliability_points
            ],
        }


def bin_index(confidence: float) -> int:
    """edges[i] <= c < edges[i+1]; confidence 1.0 lands in the last bin."""
    idx = int(confidence * N_BINS)
    return min(idx, N_BINS - 1)


def bucket(records: list[PredictionRecord]) -> BinStats:
    if not records:
        raise EmptyInput("no prediction records")
    counts = [0] * N_BINS
    conf_sums = [0.0] * N_BINS
    correct_counts = [0] * N_BINS
    for rec in records:
        i = bin_index(rec.confidence)
        counts[i] += 1
        conf_sums[i] += rec.confidence
        correct_counts[i] += int(rec.correct)
    total = len(records)
    percents = [100.0 * c / total for c in counts]
    mean_conf = [
        conf_sums[i] / counts[i] if counts[i] else float("nan") for i in range(N_BINS)
    ]
    accuracy = [
        correct_counts[i] / counts[i] if counts[i] else float("nan")
        for i in range(N_BINS)
    ]
    return BinStats(counts, percents, mean_conf, accuracy, total)


def ece(stats: BinStats) -> float:
    """Count-weighted mean of |bin accuracy - bin mean confidence|."""
    acc = 0.0
    for n, conf, a in zip(stats.counts, stats.mean_confidence, stats.accuracy):
        if n:
            acc += n / stats.total * abs(a - conf)
    return acc


def mce(stats: BinStats) -> float:
    """Worst per-bin calibration error."""
    errors = [
        abs(a - conf)
        for n, conf, a in zip(stats.counts, stats.mean_confidence, stats.accuracy)
        if n
    ]
    return max(errors)


def brier(records: list[PredictionRecord], multiclass: bool = False) -> float:
    """Mean squared gap between the gold label's probability and 1.

    With multiclass=True the standard sum-over-classes variant is used
    instead (for cross-checking against other tooling).
    """
    if not records:
        raise EmptyInput("no prediction records")
    if not multiclass:
        return float(np.mean([(rec.p_true - 1.0) ** 2 for rec in records]))
    total = 0.0
    for rec in records:
        for c, p in enumerate(rec.probs):
            total += (p - (1.0 if c == rec.label else 0.0)) ** 2
    return total / len(records)


def reliability_points(stats: BinStats) -> list[tuple[float, float, int]]:
    """(mean confidence, accuracy, count) per non-empty bin, in bin order."""
    return [
        (stats.mean_confidence[i], stats.accuracy[i], stats.counts[i])
        for i in range(N_BINS)
        if stats.counts[i]
    ]


def calibration_report(model_name: str,
                       records: list[PredictionRecord]) -> CalibrationReport:
    stats = bucket(records)
    avg_conf = 100.0 * float(np.mean([r.confidence for r in records]))
    return CalibrationReport(
        model_name=model_name,
        bins=stats,
        average_confidence=avg_conf,
        ece=ece(stats),
        mce=mce(stats),
        brier=brier(records),
        reliability_points=reliability_points(stats),
    )

"""Top-K attribution sets, Jaccard overlap, and dataset-level aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, MismatchedCoverage, MismatchedInstances
from .lime import Attribution


@dataclass(frozen=True)
class TopKSet:
    instance_id: str
    model_name: str
    method: str
    k: int
    feature_ids: frozenset[int]


@dataclass
class AlignmentReport:
    model_a: str
    model_b: str
    method: str
    k: int
    per_instance: list[float]
    mean_jaccard: float
    sweep: dict[int, float]  # K -> mean jaccard
    capped_instances: int = 0  # instances with fewer than K features
    compared_instances: int = 0
    excluded_disagreements: int = 0

    def to_json_dict(self) -> dict:
        return {
            "model_a": self.model_a,
            "model_b": self.model_b,
            "method": self.method,
            "k": self.k,
            "per_instance": self.per_instance,
            "mean_jaccard": self.mean_jaccard,
            "sweep": {str(k): v for k, v in sorted(self.sweep.items())},
            "capped_instances": self.capped_instances,
            "compared_instances": self.compared_instances,
            "excluded_disagreements": self.excluded_disagreements,
        }


def top_k(attr: Attribution, k: int) -> TopKSet:
    """The min(K, d) features with largest |score|; ties go to the lower id."""
    if k < 1:
        raise ValueError("K must be >= 1")
    scores = np.abs(np.asarray(attr.scores, dtype=float))
    d = len(scores)
    order = sorted(range(d), key=lambda i: (-scores[i], i))
    return TopKSet(
        instance_id=attr.instance_id,
        model_name=attr.model_name,
        method=attr.method,
        k=k,
        feature_ids=frozenset(order[: min(k, d)]),
    )


def jaccard(a: TopKSet, b: TopKSet) -> float:
    if a.instance_id != b.instance_id:
        raise MismatchedInstances(f"{a.instance_id!r} vs {b.instance_id!r}")
    if a.k != b.k:
        raise MismatchedInstances(f"K mismatch: {a.k} vs {b.k}")
    union = a.feature_ids | b.feature_ids
    if not union:
        raise MismatchedInstances("both top-K sets are empty")
    return len(a.feature_ids & b.feature_ids) / len(union)


def align_models(attrs_a: list[Attribution], attrs_b: list[Attribution],
                 k: int, k_max: int = 10,
                 exclude_disagreements: bool = False) -> AlignmentReport:
    """Per-instance Jaccard at K plus the K=1..k_max sweep, all computed
    from stored attributions without re-explaining anything."""
    by_id_b = {a.instance_id: a for a in attrs_b}
    if len(by_id_b) != len(attrs_b):
        raise MismatchedCoverage("duplicate instance ids on side b")
    missing = [a.instance_id for a in attrs_a if a.instance_id not in by_id_b]
    extra = set(by_id_b) - {a.instance_id for a in attrs_a}
    if missing or extra:
        raise MismatchedCoverage(
            f"instances only on one side: missing={missing[:5]} extra={sorted(extra)[:5]}"
        )

    method = attrs_a[0].method if attrs_a else "?"
    pairs = []
    excluded = 0
    for a in attrs_a:
        b = by_id_b[a.instance_id]
        if a.method != b.method:
            raise MismatchedInstances(
                f"method mismatch on {a.instance_id!r}: {a.method} vs {b.method}"
            )
        if exclude_disagreements and a.explained_class != b.explained_class:
            excluded += 1
            continue
        pairs.append((a, b))

    if not pairs:
        raise EmptyInput("no instances left to compare")
    capped = sum(1 for a, _ in pairs if len(a.scores) < k)
    per_instance = [jaccard(top_k(a, k), top_k(b, k)) for a, b in pairs]
    sweep = {
        kk: float(np.mean([jaccard(top_k(a, kk), top_k(b, kk)) for a, b in pairs]))
        for kk in range(1, k_max + 1)
    }
    return AlignmentReport(
        model_a=attrs_a[0].model_name if attrs_a else "?",
        model_b=attrs_b[0].model_name if attrs_b else "?",
        method=method,
        k=k,
        per_instance=per_instance,
        mean_jaccard=float(np.mean(per_instance)),
        sweep=sweep,
        capped_instances=capped,
        compared_instances=len(pairs),
        excluded_disagreements=excluded,
    )

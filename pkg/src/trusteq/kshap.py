"""Kernel SHAP attribution with an exact-enumeration mode, paired coalition
sampling, and a brute-force Shapley oracle for verification."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .backends import PredictionBackend
from .core import FeatureSpace, Instance
from .errors import SingularSystem, TooFewSamples, TooManyFeatures
from .lime import Attribution, _masked_pair, batched_probs

EXACT_ORACLE_CAP = 12  # 2^12 cached evaluations at most


@dataclass
class KshapConfig:
    budget: int = 2048
    exact_threshold: int = 13
    ridge: float = 1e-9
    chunk_size: int = 64


class CachedValueFunction:
    """v(S) = probability of the explained class on the masked instance.

    Values are cached per coalition bitmask; exact mode touches each subset
    once, paired sampling may revisit complements.
    """

    def __init__(self, backend: PredictionBackend, instance: Instance,
                 feature_space: FeatureSpace, explained_class: int,
                 chunk_size: int = 64):
        self.backend = backend
        self.instance = instance
        self.feature_space = feature_space
        self.explained_class = explained_class
        self.chunk_size = chunk_size
        self._cache: dict[int, float] = {}

    @property
    def n_evals(self) -> int:
        return len(self._cache)

    def _mask_of(self, bitmask: int) -> np.ndarray:
        d = self.feature_space.d
        return np.array([(bitmask >> j) & 1 for j in range(d)], dtype=np.int8)

    def many(self, bitmasks: list[int]) -> np.ndarray:
        missing = [bm for bm in dict.fromkeys(bitmasks) if bm not in self._cache]
        if missing:
            pairs = [
                _masked_pair(self.instance, self.feature_space, self._mask_of(bm))
                for bm in missing
            ]
            probs = batched_probs(self.backend, pairs, self.chunk_size)
            for bm, row in zip(missing, probs):
                self._cache[bm] = float(row[self.explained_class])
        return np.array([self._cache[bm] for bm in bitmasks])

    def __call__(self, members) -> float:
        bitmask = 0
        for i in members:
            bitmask |= 1 << i
        return float(self.many([bitmask])[0])


def exact_shapley(v, d: int) -> np.ndarray:
    """Classical Shapley values by full coalition enumeration.

    phi_i = sum over S not containing i of |S|!(d-|S|-1)!/d! * (v(S+i)-v(S)).
    v takes an iterable of member indices; results are cached per bitmask
    so each of the 2^d subsets is evaluated once.
    """
    if d > EXACT_ORACLE_CAP:
        raise TooManyFeatures(f"d={d} exceeds the oracle cap {EXACT_ORACLE_CAP}")
    values = {}
    for bm in range(2**d):
        values[bm] = v([j for j in range(d) if bm >> j & 1])
    fact = [factorial(k) for k in range(d + 1)]
    phi = np.zeros(d)
    for i in range(d):
        bit = 1 << i
        for bm in range(2**d):
            if bm & bit:
                continue
            s = bin(bm).count("1")
            weight = fact[s] * fact[d - s - 1] / fact[d]
            phi[i] += weight * (values[bm | bit] - values[bm])
    return phi


def _kernel_weight(d: int, s: int) -> float:
    return (d - 1) / (comb(d, s) * s * (d - s))


def _sample_coalitions(d: int, budget: int, rng: np.random.Generator) -> list[int]:
    """Paired sampling without replacement: each coalition enters with its
    complement. Coalition sizes are drawn proportional to the aggregate
    kernel mass at each size."""
    sizes = np.arange(1, d)
    size_mass = (d - 1) / (sizes * (d - sizes))
    size_p = size_mass / size_mass.sum()
    full = (1 << d) - 1
    chosen: list[int] = []
    seen: set[int] = set()
    attempts = 0
    while len(chosen) < budget and attempts < budget * 50:
        attempts += 1
        s = int(rng.choice(sizes, p=size_p))
        members = rng.choice(d, size=s, replace=False)
        bm = 0
        for i in members:
            bm |= 1 << int(i)
        if bm in seen:
            continue
        comp = full ^ bm
        seen.add(bm)
        seen.add(comp)
        chosen.append(bm)
        if comp != bm and len(chosen) < budget:
            chosen.append(comp)
    return chosen


def _solve_constrained_wls(masks: np.ndarray, y: np.ndarray, w: np.ndarray,
                           total: float, ridge: float) -> np.ndarray:
    """WLS with the efficiency constraint sum(phi) = total built in by
    eliminating the last coordinate before the solve."""
    n, d = masks.shape
    if d == 1:
        return np.array([total])
    Z = masks.astype(float)
    X = Z[:, : d - 1] - Z[:, [d - 1]]
    t = y - Z[:, d - 1] * total
    XtW = X.T * w
    A = XtW @ X
    b = XtW @ t
    eps = ridge
    for _ in range(30):
        try:
            phi_head = np.linalg.solve(A + eps * np.eye(d - 1), b)
        except np.linalg.LinAlgError:
            phi_head = None
        if phi_head is not None and np.all(np.isfinite(phi_head)):
            return np.append(phi_head, total - phi_head.sum())
        eps = (eps + 1e-6) * 2
    raise SingularSystem("constrained WLS ladder exhausted")


def kernel_shap_values(v: CachedValueFunction, d: int, cfg: KshapConfig,
                       rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Solve for Shapley values via the SHAP kernel; returns (phi, exact)."""
    full = (1 << d) - 1
    v_empty, v_full = v.many([0, full])
    total = v_full - v_empty

    if d == 1:
        return np.array([total]), True

    exact = d <= cfg.exact_threshold
    if exact:
        bitmasks = [bm for bm in range(2**d) if bm not in (0, full)]
    else:
        if cfg.budget < 2 * d + 2:
            raise TooFewSamples(f"budget={cfg.budget} < 2d+2={2 * d + 2}")
        bitmasks = _sample_coalitions(d, cfg.budget, rng)

    y = v.many(bitmasks) - v_empty
    masks = np.array(
        [[(bm >> j) & 1 for j in range(d)] for bm in bitmasks], dtype=np.int8
    )
    sizes = masks.sum(axis=1)
    w = np.array([_kernel_weight(d, int(s)) for s in sizes])
    phi = _solve_constrained_wls(masks, y, w, total, cfg.ridge)
    return phi, exact


def explain_kshap(backend: PredictionBackend, instance: Instance,
                  feature_space: FeatureSpace, cfg: KshapConfig,
                  rng: np.random.Generator) -> Attribution:
    d = feature_space.d
    full_mask = np.ones(d, dtype=np.int8)
    probs = backend.predict_proba([_masked_pair(instance, feature_space, full_mask)])
    explained_class = int(np.argmax(probs[0]))

    v = CachedValueFunction(backend, instance, feature_space, explained_class,
                            cfg.chunk_size)
    phi, exact = kernel_shap_values(v, d, cfg, rng)

    return Attribution(
        instance_id=instance.id,
        method="kshap",
        model_name=backend.name,
        explained_class=explained_class,
        scores=phi,
        diagnostics={"n_evals": v.n_evals, "exact": exact},
    )

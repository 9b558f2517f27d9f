"""Built-in oracle suites, runnable without pytest via `trusteq selftest`."""

from __future__ import annotations

import numpy as np

from .backends import AdditiveBackend
from .calibration import BinStats, ece, mce
from .core import Instance, stream_rng, tokenize
from .kshap import CachedValueFunction, KshapConfig, exact_shapley, kernel_shap_values
from .lime import LimeConfig, explain_lime


def _check(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{status}] {name}{suffix}")
    return ok


def _random_game(d: int, rng: np.random.Generator):
    table = rng.uniform(0.0, 1.0, size=2**d)

    def v(members):
        bm = 0
        for i in members:
            bm |= 1 << i
        return float(table[bm])

    return v


class _TableValueFunction:
    """CachedValueFunction-compatible wrapper over a lookup-table game."""

    def __init__(self, v, d):
        self._v = v
        self.d = d
        self.n_evals = 0

    def many(self, bitmasks):
        return np.array([self((j for j in range(self.d) if bm >> j & 1))
                         for bm in bitmasks])

    def __call__(self, members):
        self.n_evals += 1
        return self._v(list(members))


def shapley_oracle_suite(games_per_d: int = 5, tol: float = 1e-6) -> bool:
    ok = True
    for d in range(3, 11):
        rng = np.random.default_rng(100 + d)
        worst = 0.0
        for _ in range(games_per_d):
            v = _random_game(d, rng)
            phi_exact = exact_shapley(v, d)
            vf = _TableValueFunction(v, d)
            phi_kshap, exact = kernel_shap_values(vf, d, KshapConfig(), rng)
            worst = max(worst, float(np.max(np.abs(phi_exact - phi_kshap))))
        ok &= _check(f"kernel-shap matches brute force (d={d})", worst <= tol,
                     f"max dev {worst:.2e}")
    return ok


def lime_recovery_suite(tol: float = 1e-4) -> bool:
    ok = True
    for d in range(2, 9):
        rng = np.random.default_rng(200 + d)
        words = [f"w{i}" for i in range(d)]
        weights = {w: float(x) for w, x in zip(words, rng.uniform(-1, 1, d))}
        backend = AdditiveBackend(weights=weights, bias=float(d + 1),
                                  link="identity")
        inst = Instance(id=f"lime-{d}", text_a=" ".join(words), label=0)
        fspace = tokenize(inst)
        cfg = LimeConfig(exhaustive=True, kernel_width=float("inf"), ridge=1e-9)
        attr = explain_lime(backend, inst, fspace,
                            cfg, stream_rng(0, inst.id, "lime"))
        target = np.array([weights[s] for s in fspace.surfaces])
        dev = float(np.max(np.abs(attr.scores - target)))
        ok &= _check(f"lime recovers additive weights (d={d})", dev <= tol,
                     f"max dev {dev:.2e}")
    return ok


def calibration_fixture_suite() -> bool:
    # one bin with 3 correct @ conf 0.8, one with 1 wrong @ conf 0.6
    stats = BinStats(
        counts=[0, 0, 0, 0, 0, 0, 1, 0, 3, 0],
        percents=[0, 0, 0, 0, 0, 0, 25.0, 0, 75.0, 0],
        mean_confidence=[np.nan] * 6 + [0.6, np.nan, 0.8, np.nan],
        accuracy=[np.nan] * 6 + [0.0, np.nan, 1.0, np.nan],
        total=4,
    )
    ok = _check("ece fixture = 0.30", abs(ece(stats) - 0.30) < 1e-12)
    ok &= _check("mce fixture = 0.60", abs(mce(stats) - 0.60) < 1e-12)
    return ok


def run_selftest() -> bool:
    ok = shapley_oracle_suite()
    ok &= lime_recovery_suite()
    ok &= calibration_fixture_suite()
    print("selftest:", "all suites passed" if ok else "FAILURES above")
    return ok

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from trusteq.backends import protocol_client, purity_probe

from pathlib import Path
MINI_DATA = Path(__file__).resolve().parents[2] / "src" / "trusteq" / "data"


def bridge_command(checkpoint, *extra):
    return [sys.executable, "-m", "trusteq_bridge.server",
            "--checkpoint", checkpoint, "--max-batch", "16", *extra]


@pytest.fixture(scope="module")
def client(tiny_checkpoint):
    backend = protocol_client(command=bridge_command(tiny_checkpoint),
                              timeout=120.0)
    yield backend
    backend.close()


def test_handshake(client):
    assert client.num_classes == 2
    assert client.class_names == ["negative", "positive"]


def test_predict_rows_are_distributions(client):
    probs = client.predict_proba([("a delightful film", None),
                                  ("dreadful pacing", None)])
    assert probs.shape == (2, 2)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(probs >= 0.0)


def test_empty_text_accepted(client):
    probs = client.predict_proba([("", None)])
    assert probs.shape == (1, 2)
    assert probs[0].sum() == pytest.approx(1.0, abs=1e-6)


def test_inference_determinism(client):
    texts = [("the plot was superb", None), ("", None), ("noisy ending", None)]
    first = client.predict_proba(texts)
    second = client.predict_proba(texts)
    assert np.allclose(first, second, atol=1e-6)
    purity_probe(client, texts)


def test_pair_input_supported(tiny_checkpoint):
    backend = protocol_client(
        command=bridge_command(tiny_checkpoint), timeout=120.0)
    probs = backend.predict_proba([("the film", "the review")])
    assert probs.shape == (1, 2)
    backend.close()


def test_wire_replies_are_single_json_lines(tiny_checkpoint):
    proc = subprocess.Popen(
        bridge_command(tiny_checkpoint),
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    requests = [
        {"op": "handshake"},
        {"op": "predict", "texts": [{"a": "great scene", "b": None},
                                    {"a": "", "b": None}]},
        {"op": "shutdown"},
    ]
    out, _ = proc.communicate(
        "\n".join(json.dumps(r) for r in requests) + "\n", timeout=300)
    lines = [l for l in out.splitlines() if l.strip()]
    assert len(lines) == 3  # exactly one reply line per request
    handshake, predict, bye = (json.loads(l) for l in lines)
    assert handshake["num_classes"] == 2
    assert len(predict["probs"]) == 2
    assert bye == {"ok": True}
    assert proc.returncode == 0


def test_startup_failure_reports_json_error(tmp_path):
    proc = subprocess.Popen(
        bridge_command(str(tmp_path / "missing")),
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    out, _ = proc.communicate(timeout=300)
    assert proc.returncode != 0
    first = json.loads(out.splitlines()[0])
    assert "error" in first


def test_mask_token_mode(tiny_checkpoint):
    backend = protocol_client(
        command=bridge_command(tiny_checkpoint, "--mask-mode", "mask-token"),
        timeout=120.0)
    probs = backend.predict_proba([("", None), ("__MASK__ film", None)])
    assert probs.shape == (2, 2)
    backend.close()


def test_bridge_audit_acceptance(tiny_checkpoint, tmp_path):
    """End-to-end: handshake + 50-instance audit through the bridge with
    finite metrics and the purity self-test passing."""
    from trusteq.report import config_from_dict, run_audit

    raw = {
        "dataset": {
            "path": str(MINI_DATA / "mini_sentiment.jsonl"),
            "manifest": str(MINI_DATA / "mini_manifest.json"),
            "name": "mini-sentiment",
        },
        "models": [
            {"name": "bert-tiny-bridge",
             "backend": {"kind": "subprocess",
                         "command": bridge_command(tiny_checkpoint),
                         "timeout": 300}},
            {"name": "bow-compressed",
             "backend": {"kind": "bow_logistic", "vocab_cap": 50}},
        ],
        "reference_model": "bert-tiny-bridge",
        "methods": ["lime", "kshap"],
        "K": 10,
        "sample_limit": 50,
        "global_seed": 7,
        "lime": {"n_samples": 200},
        "kshap": {"budget": 2048, "exact_threshold": 13},
    }
    start = time.perf_counter()
    report = run_audit(config_from_dict(raw))
    elapsed = time.perf_counter() - start

    assert report.num_instances == 50
    for cal in report.calibration:
        assert np.isfinite([cal.ece, cal.mce, cal.brier,
                            cal.average_confidence]).all()
    for align in report.alignment:
        assert np.isfinite(align.mean_jaccard)
        assert all(np.isfinite(v) for v in align.sweep.values())
    for attrs in report.attributions.values():
        assert len(attrs) == 50
        for attr in attrs:
            assert np.isfinite(attr.scores).all()
            if attr.method == "kshap":
                assert attr.diagnostics["exact"]  # d <= exact_threshold here
    print(f"[PASS] bridge audit: 50 instances in {elapsed:.1f}s (< 900s)")
    assert elapsed < 900.0

"""Serve a text-classification checkpoint over the JSON-lines protocol.

Requests arrive one JSON object per line on stdin; every reply is exactly
one JSON line on stdout. Ops: handshake, predict, shutdown. The process is
single-threaded; the auditing side serializes its requests.

Launch: trusteq-bridge --checkpoint PATH [--max-batch 32] [--device cpu]
        [--pair-mode concat-with-separator] [--mask-mode delete]
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

MASK_SENTINEL = "__MASK__"


@dataclass
class BridgeConfig:
    checkpoint: str
    device: str = "cpu"
    max_batch: int = 32
    pair_mode: str = "concat-with-separator"  # or "single-text"
    mask_mode: str = "delete"  # or "mask-token"

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.pair_mode not in ("concat-with-separator", "single-text"):
            raise ValueError(f"unknown pair_mode {self.pair_mode!r}")
        if self.mask_mode not in ("delete", "mask-token"):
            raise ValueError(f"unknown mask_mode {self.mask_mode!r}")


class CheckpointServer:
    def __init__(self, cfg: BridgeConfig):
        import torch
        from transformers import (
            AutoModelForSequenceClassification,
            AutoTokenizer,
        )

        self.cfg = cfg
        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.checkpoint)
        self.model = AutoModelForSequenceClassification.from_pretrained(
            cfg.checkpoint
        )
        device = "cuda" if cfg.device == "accelerator" else "cpu"
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.num_classes = int(self.model.config.num_labels)
        id2label = getattr(self.model.config, "id2label", None) or {}
        self.class_names = [
            str(id2label.get(i, f"class_{i}")) for i in range(self.num_classes)
        ]
        self.model_name = str(
            getattr(self.model.config, "name_or_path", cfg.checkpoint)
        )

    def _prepare(self, text: str) -> str:
        if self.cfg.mask_mode == "mask-token":
            mask = self.tokenizer.mask_token or MASK_SENTINEL
            text = text.replace(MASK_SENTINEL, mask)
            if not text.strip():
                return mask
        return text

    def predict(self, texts: list[dict]) -> list[list[float]]:
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.cfg.max_batch):
            chunk = texts[start : start + self.cfg.max_batch]
            firsts = [self._prepare(t.get("a") or "") for t in chunk]
            seconds = [t.get("b") for t in chunk]
            if self.cfg.pair_mode == "concat-with-separator" and any(
                s is not None for s in seconds
            ):
                pair = [self._prepare(s or "") for s in seconds]
                encoded = self.tokenizer(
                    firsts, pair, padding=True, truncation=True,
                    return_tensors="pt",
                )
            else:
                merged = [
                    f if s is None else f"{f} {self._prepare(s)}".strip()
                    for f, s in zip(firsts, seconds)
                ]
                encoded = self.tokenizer(
                    merged, padding=True, truncation=True, return_tensors="pt"
                )
            encoded = {k: v.to(self.device) for k, v in encoded.items()}
            with self.torch.no_grad():
                logits = self.model(**encoded).logits
            probs = self.torch.softmax(logits, dim=-1).cpu()
            rows.extend([[float(p) for p in row] for row in probs])
        return rows


def _emit(obj: dict):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def serve(cfg: BridgeConfig) -> int:
    try:
        server = CheckpointServer(cfg)
    except Exception as exc:  # startup failure: one JSON error line, exit != 0
        _emit({"error": f"startup failed: {exc}"})
        return 1

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
        except json.JSONDecodeError as exc:
            _emit({"error": f"bad request: {exc}"})
            continue
        if op == "handshake":
            _emit({
                "num_classes": server.num_classes,
                "class_names": server.class_names,
                "model_name": server.model_name,
            })
        elif op == "predict":
            try:
                _emit({"probs": server.predict(req.get("texts", []))})
            except Exception as exc:
                _emit({"error": f"predict failed: {exc}"})
        elif op == "shutdown":
            _emit({"ok": True})
            return 0
        else:
            _emit({"error": f"unknown op {op!r}"})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trusteq-bridge",
        description="Serve a transformers checkpoint over the trusteq "
                    "wire protocol on stdio",
    )
    parser.add_argument("--checkpoint", required=True,
                        help="model id or local path")
    parser.add_argument("--device", choices=["cpu", "accelerator"],
                        default="cpu")
    parser.add_argument("--max-batch", type=int, default=32)
    parser.add_argument("--pair-mode",
                        choices=["concat-with-separator", "single-text"],
                        default="concat-with-separator")
    parser.add_argument("--mask-mode", choices=["delete", "mask-token"],
                        default="delete")
    args = parser.parse_args(argv)
    cfg = BridgeConfig(
        checkpoint=args.checkpoint,
        device=args.device,
        max_batch=args.max_batch,
        pair_mode=args.pair_mode,
        mask_mode=args.mask_mode,
    )
    return serve(cfg)


if __name__ == "__main__":
    sys.exit(main())

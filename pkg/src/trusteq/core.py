"""Domain types, word-level tokenization, dataset loading and seeding.

An interpretable feature is a unique lowercased word; all occurrences of
the word (in either text segment) belong to the same feature.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInstance, LabelOutOfRange, ParseError

WORD_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class Instance:
    id: str
    text_a: str
    text_b: str | None = None
    label: int = 0

    def __post_init__(self):
        if not self.text_a.strip():
            raise ParseError(f"instance {self.id!r}: text_a is empty")

    @property
    def segments(self) -> tuple[str, ...]:
        if self.text_b is None:
            return (self.text_a,)
        return (self.text_a, self.text_b)


@dataclass(frozen=True)
class Feature:
    feature_id: int
    surface: str
    positions: tuple[tuple[int, int], ...]  # (segment, token-index)


@dataclass(frozen=True)
class FeatureSpace:
    features: tuple[Feature, ...]
    segment_tokens: tuple[tuple[str, ...], ...]  # lowercased tokens per segment

    @property
    def d(self) -> int:
        return len(self.features)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(f.surface for f in self.features)


def tokenize(instance: Instance) -> FeatureSpace:
    """Split both segments on word boundaries and group duplicate words.

    Tokens are lowercased; pure punctuation never matches the word regex
    and is dropped. Raises EmptyInstance when nothing survives.
    """
    segment_tokens = []
    by_surface: dict[str, list[tuple[int, int]]] = {}
    for seg_idx, seg in enumerate(instance.segments):
        tokens = [t.lower() for t in WORD_RE.findall(seg)]
        segment_tokens.append(tuple(tokens))
        for tok_idx, tok in enumerate(tokens):
            by_surface.setdefault(tok, []).append((seg_idx, tok_idx))
    if not by_surface:
        raise EmptyInstance(f"instance {instance.id!r} has no word tokens")
    features = tuple(
        Feature(i, surface, tuple(positions))
        for i, (surface, positions) in enumerate(by_surface.items())
    )
    return FeatureSpace(features=features, segment_tokens=tuple(segment_tokens))


@dataclass(frozen=True)
class Dataset:
    name: str
    num_classes: int
    class_names: tuple[str, ...]
    instances: tuple[Instance, ...]

    def __post_init__(self):
        if self.num_classes != len(self.class_names):
            raise ParseError(
                f"manifest: num_classes={self.num_classes} but "
                f"{len(self.class_names)} class names"
            )

    def __len__(self):
        return len(self.instances)


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if "num_classes" not in manifest or "class_names" not in manifest:
        raise ParseError(f"{path}: manifest needs num_classes and class_names")
    return manifest


def load_dataset(path, manifest: dict, name: str | None = None) -> Dataset:
    """Read JSONL instances and validate them against the manifest."""
    num_classes = int(manifest["num_classes"])
    class_names = tuple(manifest["class_names"])
    instances = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON: {exc}", line_no) from exc
            try:
                inst = Instance(
                    id=str(obj["id"]),
                    text_a=obj["text_a"],
                    text_b=obj.get("text_b"),
                    label=int(obj["label"]),
                )
            except KeyError as exc:
                raise ParseError(f"missing field {exc}", line_no) from exc
            if not 0 <= inst.label < num_classes:
                raise LabelOutOfRange(
                    f"label {inst.label} outside 0..{num_classes - 1}", line_no
                )
            if inst.id in seen_ids:
                raise ParseError(f"duplicate instance id {inst.id!r}", line_no)
            seen_ids.add(inst.id)
            instances.append(inst)
    return Dataset(
        name=name or str(path),
        num_classes=num_classes,
        class_names=class_names,
        instances=tuple(instances),
    )


def stream_seed(global_seed: int, instance_id: str, method_tag: str) -> int:
    """Per-instance random stream seed, independent of dataset order."""
    payload = f"{global_seed}\x1f{instance_id}\x1f{method_tag}".encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def stream_rng(global_seed: int, instance_id: str, method_tag: str) -> np.random.Generator:
    return np.random.default_rng(stream_seed(global_seed, instance_id, method_tag))

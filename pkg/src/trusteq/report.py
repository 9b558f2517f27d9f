"""Audit orchestration: build backends, predict, attribute, align, calibrate.

A full audit materializes every attribution (all d scores, not just the
top-K) so K-sweeps and re-renders never touch a backend again.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .alignment import AlignmentReport, align_models
from .backends import (
    AdditiveBackend,
    PredictionBackend,
    TrainConfig,
    protocol_client,
    purity_probe,
    train_bow_logistic,
)
from .calibration import CalibrationReport, PredictionRecord, calibration_report
from .core import Dataset, load_dataset, load_manifest, stream_rng, tokenize
from .errors import ConfigError, EmptyDataset
from .kshap import KshapConfig, explain_kshap
from .lime import Attribution, LimeConfig, explain_lime

METHODS = ("lime", "kshap")


@dataclass
class ModelSpec:
    name: str
    backend: dict
    metadata: dict = field(default_factory=dict)


@dataclass
class AuditConfig:
    dataset_path: str
    manifest: dict
    models: list[ModelSpec]
    reference_model: str
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    k: int = 10
    k_max: int = 10
    sample_limit: int | None = None
    global_seed: int = 0
    all_pairs: bool = False
    exclude_disagreements: bool = False
    lime: LimeConfig = field(default_factory=LimeConfig)
    kshap: KshapConfig = field(default_factory=KshapConfig)
    jobs: int = 1
    dataset_name: str | None = None

    def __post_init__(self):
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate model names")
        if self.reference_model not in names:
            raise ConfigError(f"reference_model {self.reference_model!r} not in models")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.k < 1 or self.k > self.k_max:
            raise ConfigError(f"need 1 <= K ({self.k}) <= K_max ({self.k_max})")


def load_config(path) -> AuditConfig:
    base = Path(path).parent
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw, base=base)


def config_from_dict(raw: dict, base: Path = Path(".")) -> AuditConfig:
    try:
        ds = raw["dataset"]
        dataset_path = str(base / ds["path"])
        manifest = ds["manifest"]
        if isinstance(manifest, str):
            manifest = load_manifest(base / manifest)
        models = [
            ModelSpec(m["name"], m["backend"], m.get("metadata", {}))
            for m in raw["models"]
        ]
        cfg = AuditConfig(
            dataset_path=dataset_path,
            manifest=manifest,
            models=models,
            reference_model=raw["reference_model"],
            methods=list(raw.get("methods", METHODS)),
            k=int(raw.get("K", 10)),
            k_max=int(raw.get("K_max", 10)),
            sample_limit=raw.get("sample_limit"),
            global_seed=int(raw.get("global_seed", 0)),
            all_pairs=bool(raw.get("all_pairs", False)),
            exclude_disagreements=bool(raw.get("exclude_disagreements", False)),
            lime=LimeConfig(**raw.get("lime", {})),
            kshap=KshapConfig(**raw.get("kshap", {})),
            jobs=int(raw.get("jobs", 1)),
            dataset_name=ds.get("name"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    return cfg


def build_backend(spec: ModelSpec, dataset: Dataset,
                  global_seed: int) -> PredictionBackend:
    kind = spec.backend.get("kind")
    opts = {k: v for k, v in spec.backend.items() if k != "kind"}
    if kind == "bow_logistic":
        train_cfg = TrainConfig(
            seed=int(opts.pop("seed", global_seed)), **opts
        )
        return train_bow_logistic(dataset, train_cfg, name=spec.name)
    if kind == "additive":
        return AdditiveBackend(
            weights={str(k): float(v) for k, v in opts.get("weights", {}).items()},
            bias=float(opts.get("bias", 0.0)),
            link=opts.get("link", "logistic"),
            name=spec.name,
        )
    if kind == "subprocess":
        return protocol_client(
            command=opts["command"],
            timeout=float(opts.get("timeout", 60.0)),
            name=spec.name,
        )
    if kind == "tcp":
        return protocol_client(
            endpoint=opts["endpoint"],
            timeout=float(opts.get("timeout", 60.0)),
            name=spec.name,
        )
    raise ConfigError(f"unknown backend kind {kind!r} for model {spec.name!r}")


@dataclass
class AuditReport:
    config_echo: dict
    dataset_name: str
    num_instances: int
    models: list[dict]
    calibration: list[CalibrationReport]
    alignment: list[AlignmentReport]
    examples: list[dict]
    attributions: dict  # (model, method) -> list[Attribution]
    feature_spaces: dict  # instance id -> FeatureSpace

    def to_json_dict(self) -> dict:
        return {
            "toolkit_version": __version__,
            "config": self.config_echo,
            "dataset": {"name": self.dataset_name, "instances": self.num_instances},
            "models": self.models,
            "calibration": [c.to_json_dict() for c in self.calibration],
            "alignment": [a.to_json_dict() for a in self.alignment],
            "examples": self.examples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def attribution_records(self) -> list[dict]:
        records = []
        for (_, _), attrs in sorted(self.attributions.items()):
            for attr in attrs:
                records.append(attr.to_record(self.feature_spaces[attr.instance_id]))
        return records


def _config_echo(cfg: AuditConfig) -> dict:
    return {
        "dataset_path": cfg.dataset_path,
        "manifest": cfg.manifest,
        "models": [
            {"name": m.name, "backend": m.backend, "metadata": m.metadata}
            for m in cfg.models
        ],
        "reference_model": cfg.reference_model,
        "methods": cfg.methods,
        "K": cfg.k,
        "K_max": cfg.k_max,
        "sample_limit": cfg.sample_limit,
        "global_seed": cfg.global_seed,
        "all_pairs": cfg.all_pairs,
        "exclude_disagreements": cfg.exclude_disagreements,
        "lime": vars(cfg.lime),
        "kshap": vars(cfg.kshap),
        "notes": {
            "feature_grouping": "duplicate words grouped into one feature",
            "ranking": "top-K by absolute score",
            "shap_variant": "kernel-shap",
            "ece_bins": 10,
        },
    }


def _explain_one(method, backend, instance, fspace, cfg):
    rng = stream_rng(cfg.global_seed, instance.id, f"{method}:{backend.name}")
    if method == "lime":
        return explain_lime(backend, instance, fspace, cfg.lime, rng)
    return explain_kshap(backend, instance, fspace, cfg.kshap, rng)


def run_audit(cfg: AuditConfig) -> AuditReport:
    dataset = load_dataset(cfg.dataset_path, cfg.manifest,
                           name=cfg.dataset_name)
    instances = dataset.instances
    if cfg.sample_limit is not None:
        instances = instances[: cfg.sample_limit]
    if not instances:
        raise EmptyDataset("no instances to audit")

    backends = {m.name: build_backend(m, dataset, cfg.global_seed)
                for m in cfg.models}

    # repeat-probe purity self-test on up to 5 instances before the audit
    probe_rng = stream_rng(cfg.global_seed, "__probe__", "purity")
    probe_idx = sorted(
        probe_rng.choice(len(instances), size=min(5, len(instances)), replace=False)
    )
    probe_texts = [(instances[i].text_a, instances[i].text_b) for i in probe_idx]
    for backend in backends.values():
        purity_probe(backend, probe_texts)

    feature_spaces = {inst.id: tokenize(inst) for inst in instances}
    texts = [(inst.text_a, inst.text_b) for inst in instances]

    calibration = []
    for spec in cfg.models:
        backend = backends[spec.name]
        probs = backend.predict_proba(texts)
        records = [
            PredictionRecord(inst.id, tuple(float(p) for p in row), inst.label)
            for inst, row in zip(instances, probs)
        ]
        calibration.append(calibration_report(spec.name, records))

    tasks = [
        (method, spec.name, inst)
        for method in cfg.methods
        for spec in cfg.models
        for inst in instances
    ]

    def work(task):
        method, model_name, inst = task
        return _explain_one(method, backends[model_name], inst,
                            feature_spaces[inst.id], cfg)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    attributions: dict[tuple[str, str], list[Attribution]] = {}
    for task, attr in zip(tasks, results):
        method, model_name, _ = task
        attributions.setdefault((model_name, method), []).append(attr)

    reference = cfg.reference_model
    pairs = [(reference, m.name) for m in cfg.models if m.name != reference]
    if not pairs:  # single model audited against itself
        pairs = [(reference, reference)]
    if cfg.all_pairs:
        others = [m.name for m in cfg.models if m.name != reference]
        pairs += [
            (a, b) for i, a in enumerate(others) for b in others[i + 1 :]
        ]

    alignment = [
        align_models(
            attributions[(a, method)],
            attributions[(b, method)],
            cfg.k,
            cfg.k_max,
            cfg.exclude_disagreements,
        )
        for a, b in pairs
        for method in cfg.methods
    ]

    examples = _drilldown(cfg, instances, dataset, backends, attributions,
                          feature_spaces)

    for backend in backends.values():
        backend.close()

    return AuditReport(
        config_echo=_config_echo(cfg),
        dataset_name=dataset.name,
        num_instances=len(instances),
        models=[
            {
                "name": m.name,
                "metadata": m.metadata,
                "num_classes": backends[m.name].num_classes,
            }
            for m in cfg.models
        ],
        calibration=calibration,
        alignment=alignment,
        examples=examples,
        attributions=attributions,
        feature_spaces=feature_spaces,
    )


def _drilldown(cfg, instances, dataset, backends, attributions, feature_spaces,
               top_words: int = 3):
    from .alignment import top_k as _top_k

    examples = []
    for inst in instances:
        fspace = feature_spaces[inst.id]
        entry = {
            "instance": inst.id,
            "text_a": inst.text_a,
            "text_b": inst.text_b,
            "label": dataset.class_names[inst.label],
            "models": [],
        }
        for spec in cfg.models:
            row = backends[spec.name].predict_proba([(inst.text_a, inst.text_b)])[0]
            model_entry = {
                "model": spec.name,
                "predicted": dataset.class_names[int(row.argmax())],
                "confidence": float(row.max()),
                "top_words": {},
            }
            for method in cfg.methods:
                attr = next(
                    a for a in attributions[(spec.name, method)]
                    if a.instance_id == inst.id
                )
                chosen = _top_k(attr, top_words)
                ranked = sorted(
                    chosen.feature_ids,
                    key=lambda i: (-abs(attr.scores[i]), i),
                )
                model_entry["top_words"][method] = [
                    {
                        "word": fspace.features[i].surface,
                        "score": float(attr.scores[i]),
                    }
                    for i in ranked
                ]
            entry["models"].append(model_entry)
        examples.append(entry)
    return examples

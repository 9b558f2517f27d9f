"""Command line entry points.

Verbs:
  audit      full pipeline; writes report.json / report.md / attributions.jsonl
             and SVG figures under --out
  explain    single-instance drill-down
  calibrate  calibration metrics only
  align      alignment from a saved attributions.jsonl
  selftest   oracle suites (exact Shapley vs Kernel SHAP, LIME recovery,
             calibration fixtures)

Exit codes: 0 ok, 2 config error, 3 backend failure, 4 dataset error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    BackendError,
    ConfigError,
    EmptyDataset,
    ParseError,
    TrusteqError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_DATASET = 4


def _add_common(parser):
    parser.add_argument("--config", required=True, help="audit config (JSON)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override global seed (also env TRUSTEQ_SEED)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=None,
                        help="parallel workers across instances")


def _load_cfg(args):
    from .report import load_config

    cfg = load_config(args.config)
    env_seed = os.environ.get("TRUSTEQ_SEED")
    if env_seed is not None:
        cfg.global_seed = int(env_seed)
    if args.seed is not None:
        cfg.global_seed = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    return cfg


def cmd_audit(args) -> int:
    from .render import render_markdown, render_svg
    from .report import run_audit

    cfg = _load_cfg(args)
    report = run_audit(cfg)

    out = Path(args.out)
    figs = out / "figs"
    figs.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.md").write_text(render_markdown(report), encoding="utf-8")
    with open(out / "attributions.jsonl", "w", encoding="utf-8") as fh:
        for record in report.attribution_records():
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    for kind in ("reliability", "ksweep"):
        for fname, svg in render_svg(report, kind).items():
            (figs / fname).write_text(svg, encoding="utf-8")
    print(f"audit complete: {report.num_instances} instances, "
          f"{len(report.models)} models -> {out}")
    return EXIT_OK


def cmd_explain(args) -> int:
    from .report import run_audit

    cfg = _load_cfg(args)
    cfg.sample_limit = None
    report = run_audit(cfg)
    match = [e for e in report.examples if e["instance"] == args.instance]
    if not match:
        print(f"instance {args.instance!r} not found", file=sys.stderr)
        return EXIT_DATASET
    print(json.dumps(match[0], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .backends import purity_probe
    from .calibration import PredictionRecord, calibration_report
    from .core import load_dataset
    from .report import build_backend

    cfg = _load_cfg(args)
    dataset = load_dataset(cfg.dataset_path, cfg.manifest, name=cfg.dataset_name)
    instances = dataset.instances[: cfg.sample_limit]
    if not instances:
        raise EmptyDataset("no instances")
    texts = [(i.text_a, i.text_b) for i in instances]
    out = {}
    for spec in cfg.models:
        backend = build_backend(spec, dataset, cfg.global_seed)
        purity_probe(backend, texts[:5])
        probs = backend.predict_proba(texts)
        records = [
            PredictionRecord(i.id, tuple(map(float, row)), i.label)
            for i, row in zip(instances, probs)
        ]
        out[spec.name] = calibration_report(spec.name, records).to_json_dict()
        backend.close()
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_align(args) -> int:
    from .alignment import align_models
    from .lime import Attribution

    by_key: dict[tuple[str, str], list[Attribution]] = {}
    with open(args.attributions, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad attribution line: {exc}", line_no) from exc
            attr = Attribution(
                instance_id=rec["instance"],
                method=rec["method"],
                model_name=rec["model"],
                explained_class=rec["class"],
                scores=np.array(rec["scores"]),
                diagnostics=rec.get("diag", {}),
            )
            by_key.setdefault((rec["model"], rec["method"]), []).append(attr)

    models = sorted({m for m, _ in by_key})
    methods = sorted({meth for _, meth in by_key})
    if len(models) < 2:
        print("need attributions from at least two models", file=sys.stderr)
        return EXIT_DATASET
    out = []
    for i, a in enumerate(models):
        for b in models[i + 1 :]:
            for method in methods:
                rep = align_models(by_key[(a, method)], by_key[(b, method)],
                                   args.k, args.k_max)
                out.append(rep.to_json_dict())
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trusteq",
        description="Trust-equivalence audit for compressed classifiers",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_audit = sub.add_parser("audit", help="run the full audit pipeline")
    _add_common(p_audit)
    p_audit.set_defaults(func=cmd_audit)

    p_explain = sub.add_parser("explain", help="single-instance drill-down")
    _add_common(p_explain)
    p_explain.add_argument("--instance", required=True)
    p_explain.set_defaults(func=cmd_explain)

    p_cal = sub.add_parser("calibrate", help="calibration metrics only")
    _add_common(p_cal)
    p_cal.set_defaults(func=cmd_calibrate)

    p_align = sub.add_parser("align", help="alignment from saved attributions")
    p_align.add_argument("--attributions", required=True)
    p_align.add_argument("--k", type=int, default=10)
    p_align.add_argument("--k-max", type=int, default=10)
    p_align.set_defaults(func=cmd_align)

    p_self = sub.add_parser("selftest", help="run the oracle suites")
    p_self.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ParseError, EmptyDataset) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except TrusteqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Markdown and SVG rendering of audit reports.

Markdown mirrors the four table families of the audit: pairwise alignment
matrix, confidence-bucket histogram with an Average Confidence footer,
ECE/MCE/Brier metrics, and per-instance top-word examples. SVGs are a
reliability diagram (one polyline per model plus the dashed identity
diagonal) and a K-sweep chart per method, on a fixed 640x480 canvas.
"""

from __future__ import annotations

from .calibration import BIN_EDGES, N_BINS
from .report import AuditReport

# --- markdown ---------------------------------------------------------------


def _table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def render_markdown(report: AuditReport) -> str:
    out = [f"# Trust-equivalence audit: {report.dataset_name}", ""]
    out.append(f"Instances audited: {report.num_instances}")
    out.append("")

    methods = sorted({a.method for a in report.alignment})
    k = report.alignment[0].k if report.alignment else 10
    out.append(f"## Interpretability alignment (mean Jaccard, K={k})")
    out.append("")
    pair_rows: dict[tuple[str, str], dict[str, float]] = {}
    for a in report.alignment:
        pair_rows.setdefault((a.model_a, a.model_b), {})[a.method] = a.mean_jaccard
    rows = [
        [pair[0], pair[1]] + [
            f"{cells[m]:.3f}" if m in cells else "-" for m in methods
        ]
        for pair, cells in pair_rows.items()
    ]
    out.append(_table(["Model 1", "Model 2"] + [m.upper() for m in methods], rows))
    out.append("")

    out.append("## Confidence buckets (% of instances)")
    out.append("")
    model_names = [c.model_name for c in report.calibration]
    bucket_rows = []
    for b in range(N_BINS):
        label = f"{BIN_EDGES[b]:.1f} - {BIN_EDGES[b + 1]:.1f}"
        bucket_rows.append(
            [label] + [f"{c.bins.percents[b]:.2f}" for c in report.calibration]
        )
    bucket_rows.append(
        ["**Average Confidence**"]
        + [f"{c.average_confidence:.2f}" for c in report.calibration]
    )
    out.append(_table(["Softmax bin"] + model_names, bucket_rows))
    out.append("")

    out.append("## Calibration metrics")
    out.append("")
    metric_rows = [
        [c.model_name, f"{c.ece:.3f}", f"{c.mce:.3f}", f"{c.brier:.3f}"]
        for c in report.calibration
    ]
    out.append(_table(["Model", "ECE", "MCE", "Brier Score"], metric_rows))
    out.append("")

    out.append("## Examples (top words per model)")
    out.append("")
    for ex in report.examples[:5]:
        out.append(f"### Instance `{ex['instance']}` (label: {ex['label']})")
        out.append("")
        out.append(f"> {ex['text_a']}")
        if ex["text_b"]:
            out.append(f">")
            out.append(f"> {ex['text_b']}")
        out.append("")
        ex_rows = []
        for m in ex["models"]:
            for method, words in m["top_words"].items():
                ex_rows.append([
                    m["model"],
                    method,
                    m["predicted"],
                    f"{m['confidence']:.3f}",
                    ", ".join(f"{w['word']} ({w['score']:+.3f})" for w in words),
                ])
        out.append(_table(
            ["Model", "Method", "Predicted", "Confidence", "Top words"], ex_rows
        ))
        out.append("")

    return "\n".join(out) + "\n"


# --- svg --------------------------------------------------------------------

CANVAS_W, CANVAS_H = 640, 480
MARGIN_LEFT, MARGIN_TOP = 70, 40
PLOT_W, PLOT_H = 500, 380

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f"]


def plot_x(value: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return MARGIN_LEFT + (value - lo) / (hi - lo) * PLOT_W


def plot_y(value: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return MARGIN_TOP + (1.0 - (value - lo) / (hi - lo)) * PLOT_H


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
        f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
        f'<text x="{CANVAS_W / 2:.1f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{PLOT_W}" '
        f'height="{PLOT_H}" fill="none" stroke="black"/>',
    ]


def _axes(x_label: str, y_label: str, x_ticks, y_ticks,
          x_lo=0.0, x_hi=1.0) -> list[str]:
    parts = []
    for t in x_ticks:
        x = plot_x(t, x_lo, x_hi)
        y0 = MARGIN_TOP + PLOT_H
        parts.append(f'<line x1="{x:.2f}" y1="{y0}" x2="{x:.2f}" '
                     f'y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{y0 + 18}" text-anchor="middle" '
                     f'font-size="10">{t:g}</text>')
    for t in y_ticks:
        y = plot_y(t)
        parts.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.2f}" '
                     f'x2="{MARGIN_LEFT}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 3:.2f}" '
                     f'text-anchor="end" font-size="10">{t:g}</text>')
    parts.append(
        f'<text x="{MARGIN_LEFT + PLOT_W / 2:.1f}" y="{CANVAS_H - 8}" '
        f'text-anchor="middle" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_TOP + PLOT_H / 2:.1f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 16 '
        f'{MARGIN_TOP + PLOT_H / 2:.1f})">{y_label}</text>'
    )
    return parts


def _legend(names: list[str]) -> list[str]:
    parts = []
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        y = MARGIN_TOP + 14 + 16 * i
        x = MARGIN_LEFT + PLOT_W - 150
        parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 22}" y2="{y}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x + 28}" y="{y + 4}" font-size="11">'
                     f'{name}</text>')
    return parts


def _polyline(points: list[tuple[float, float]], color: str,
              dashed: bool = False, klass: str = "") -> str:
    coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in points)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    cls = f' class="{klass}"' if klass else ""
    return (f'<polyline{cls} points="{coords}" fill="none" '
            f'stroke="{color}" stroke-width="2"{dash}/>')


def reliability_svg(report: AuditReport) -> str:
    parts = _svg_open(f"Reliability diagram: {report.dataset_name}")
    ticks = [i / 10 for i in range(0, 11, 2)]
    parts += _axes("Confidence", "Accuracy", ticks, ticks)
    diagonal = [(plot_x(0.0), plot_y(0.0)), (plot_x(1.0), plot_y(1.0))]
    parts.append(_polyline(diagonal, "#555555", dashed=True, klass="diagonal"))
    for i, cal in enumerate(report.calibration):
        points = [
            (plot_x(conf), plot_y(acc))
            for conf, acc, _ in cal.reliability_points
        ]
        if points:
            parts.append(_polyline(points, PALETTE[i % len(PALETTE)],
                                   klass="model"))
    parts += _legend([c.model_name for c in report.calibration])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def ksweep_svg(report: AuditReport, method: str) -> str:
    sweeps = [a for a in report.alignment if a.method == method]
    k_max = max((max(a.sweep) for a in sweeps), default=10)
    k_hi = max(float(k_max), 2.0)
    parts = _svg_open(f"Mean Jaccard vs K ({method})")
    parts += _axes("K", "Mean Jaccard", list(range(1, k_max + 1)),
                   [i / 10 for i in range(0, 11, 2)], x_lo=1.0, x_hi=k_hi)
    for i, a in enumerate(sweeps):
        points = [
            (plot_x(float(kk), 1.0, k_hi), plot_y(a.sweep[kk]))
            for kk in sorted(a.sweep)
        ]
        parts.append(_polyline(points, PALETTE[i % len(PALETTE)], klass="pair"))
    parts += _legend([f"{a.model_a} vs {a.model_b}" for a in sweeps])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(report: AuditReport, kind: str) -> dict[str, str]:
    """Return {filename: svg text} for the requested figure family."""
    if kind == "reliability":
        safe = report.dataset_name.replace("/", "_").replace(" ", "_")
        return {f"reliability_{safe}.svg": reliability_svg(report)}
    if kind == "ksweep":
        methods = sorted({a.method for a in report.alignment})
        return {f"ksweep_{m}.svg": ksweep_svg(report, m) for m in methods}
    raise ValueError(f"unknown figure kind {kind!r}")

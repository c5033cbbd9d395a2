"""CSV tables and a small self-contained SVG line plot of regret curves."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .experiment import AggregateResult

CSV_HEADER = ["config_id", "round", "mean_cum_regret", "stderr", "lambda2", "spectral_gap", "n_agents", "topology"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def export_csv(results: AggregateResult | list[AggregateResult], path: str | Path) -> None:
    if isinstance(results, AggregateResult):
        results = [results]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for agg in results:
                for x, m, se in zip(agg.x, agg.mean, agg.stderr):
                    w.writerow([agg.config_id, int(x), repr(float(m)), repr(float(se)), repr(agg.lambda2),
                                repr(agg.spectral_gap), agg.n_agents, agg.topology])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc.strerror}") from exc


def read_csv(path: str | Path) -> dict[str, dict[str, np.ndarray]]:
    """Inverse of :func:`export_csv`: columns keyed by config_id."""
    out: dict[str, dict[str, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cols = out.setdefault(row["config_id"], {"round": [], "mean_cum_regret": [], "stderr": []})
            cols["round"].append(int(row["round"]))
            cols["mean_cum_regret"].append(float(row["mean_cum_regret"]))
            cols["stderr"].append(float(row["stderr"]))
    return {k: {c: np.asarray(v) for c, v in cols.items()} for k, cols in out.items()}


def _nice_ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def export_plot(results: AggregateResult | list[AggregateResult], path: str | Path,
                title: str = "", max_points: int = 1500) -> None:
    """One polyline per configuration, ordered by decreasing spectral gap then N."""
    if isinstance(results, AggregateResult):
        results = [results]
    results = sorted(results, key=lambda a: (-a.spectral_gap, a.n_agents))
    width, height = 720, 460
    left, right, top, bottom = 80, 190, 40, 60
    pw, ph = width - left - right, height - top - bottom

    x_max = max((a.x[-1] for a in results if len(a.x)), default=1)
    y_max = max((float(a.mean.max()) for a in results if len(a.mean)), default=1.0)
    y_max = y_max if y_max > 0 else 1.0

    def sx(v):
        return left + pw * v / x_max

    def sy(v):
        return top + ph * (1.0 - v / y_max)

    x_label = "episode" if results and results[0].config.x_axis == "episodes" else "round"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for tx in _nice_ticks(0, x_max):
        parts.append(f'<line x1="{sx(tx):.1f}" y1="{top + ph}" x2="{sx(tx):.1f}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(tx):.1f}" y="{top + ph + 18}" text-anchor="middle">{tx:g}</text>')
    for ty in _nice_ticks(0, y_max):
        parts.append(f'<line x1="{left - 5}" y1="{sy(ty):.1f}" x2="{left}" y2="{sy(ty):.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{sy(ty) + 4:.1f}" text-anchor="end">{ty:g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {top + ph / 2})">mean cumulative regret</text>')
    if title:
        parts.append(f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    for i, agg in enumerate(results):
        color = PALETTE[i % len(PALETTE)]
        idx = np.unique(np.linspace(0, len(agg.x) - 1, min(max_points, len(agg.x))).astype(int))
        pts = " ".join(f"{sx(agg.x[j]):.2f},{sy(agg.mean[j]):.2f}" for j in idx)
        label = escape(f"{agg.topology} N={agg.n_agents}")
        parts.append(f'<polyline class="series" data-label="{label}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{pts}"/>')
        ly = top + 10 + 20 * i
        parts.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 45}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot {path}: {exc.strerror}") from exc

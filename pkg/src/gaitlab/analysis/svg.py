"""Tiny dependency-free SVG scatter/line plots."""

from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ["#4063d8", "#d86440", "#3fa34d", "#9558b2", "#c9a227",
           "#17becf", "#e377c2", "#7f7f7f"]


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return out_lo + (np.asarray(vals) - lo) / span * (out_hi - out_lo)


def svg_plot(series: dict[str, tuple[np.ndarray, np.ndarray]], path,
             kind: str = "scatter", width: int = 640, height: int = 480,
             title: str = "") -> None:
    """Write labeled 2-D series as an SVG scatter or polyline plot."""
    xs = np.concatenate([np.asarray(x) for x, _ in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(y) for _, y in series.values()]) if series else np.zeros(1)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    pad = 50
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="#333"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="#333"/>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x_lo:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" font-size="10">{x_hi:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{y_lo:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{y_hi:.3g}</text>',
    ]
    for i, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        px = _scale(x, x_lo, x_hi, pad, width - pad)
        py = _scale(y, y_lo, y_hi, height - pad, pad)
        if kind == "line":
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            for a, b in zip(px, py):
                parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{color}" fill-opacity="0.7"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 14 * i}" font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts))

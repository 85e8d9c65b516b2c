"""Static SVG emission for scoring reports: no rendering dependency.

The figure mirrors the usual two-panel layout: the normalized anomaly
signal with the threshold as a dashed line at 1.0, and below it a
green/red strip of the final per-frame decision.
"""

from pathlib import Path

import numpy as np

PANEL_W = 900.0
SIGNAL_H = 220.0
STRIP_H = 40.0
PAD = 40.0


def _polyline(xs, ys) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def write_signal_svg(path, report) -> None:
    n = report.frame_indices.shape[0]
    if n == 0:
        raise ValueError("cannot plot an empty report")
    thresh = report.threshold if report.threshold > 0 else 1.0
    norm = report.y / thresh
    top = max(1.5, float(norm.max()) * 1.05)

    xs = PAD + (np.arange(n) / max(n - 1, 1)) * PANEL_W
    ys = PAD + SIGNAL_H * (1.0 - norm / top)
    thresh_y = PAD + SIGNAL_H * (1.0 - 1.0 / top)
    strip_y = PAD + SIGNAL_H + 30.0
    height = strip_y + STRIP_H + PAD
    width = PAD * 2 + PANEL_W

    cell = PANEL_W / n
    strip = []
    for i, flag in enumerate(report.final_flags):
        color = "#c0392b" if flag else "#27ae60"
        strip.append(
            f'<rect x="{PAD + i * cell:.2f}" y="{strip_y:.2f}" '
            f'width="{cell + 0.5:.2f}" height="{STRIP_H}" fill="{color}"/>'
        )

    svg = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{PANEL_W}" height="{SIGNAL_H}" '
        f'fill="none" stroke="#888" stroke-width="1"/>',
        f'<polyline points="{_polyline(xs, ys)}" fill="none" '
        f'stroke="#2c3e50" stroke-width="1.2"/>',
        f'<line x1="{PAD}" y1="{thresh_y:.2f}" x2="{PAD + PANEL_W}" y2="{thresh_y:.2f}" '
        f'stroke="black" stroke-width="1" stroke-dasharray="6,4"/>',
        f'<text x="{PAD}" y="{PAD - 10:.2f}" font-size="14" fill="#333">'
        f'(a) anomaly signal / threshold</text>',
        f'<text x="{PAD}" y="{strip_y - 8:.2f}" font-size="14" fill="#333">'
        f'(b) final decision (red = abnormal)</text>',
        *strip,
        "</svg>",
    ]
    Path(path).write_text("\n".join(svg) + "\n")

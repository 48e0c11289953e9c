"""Static SVG barcode plots of segmentations.

Each video becomes one horizontal strip; segments are colored by action
id with a deterministic palette, so identical inputs always render
byte-identical files.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

from .segmentation import Segmentation


def action_color(action: int, n_actions: int) -> str:
    hue = (360 * action) // max(n_actions, 1)
    return f"hsl({hue}, 70%, 50%)"


def barcode_svg(seg: Segmentation, width: int = 960, height: int = 64, title: str = "") -> str:
    n = seg.n_frames
    n_actions = max(seg.labels.max() + 1, 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    for action, start, length in seg.segments:
        x = start * width / n
        w = length * width / n
        parts.append(
            f'<rect x="{x:.2f}" y="0" width="{w:.2f}" height="{height}" '
            f'fill="{action_color(action, n_actions)}"><title>action {action}</title></rect>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

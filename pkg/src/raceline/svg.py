"""Dependency-free SVG emission for track and racing-line overlays."""

from __future__ import annotations

import numpy as np

from .geometry import NormalSet

_PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"]


def _polyline(points: np.ndarray, color: str, width: float, closed: bool,
              dash: str | None = None) -> str:
    pts = points
    if closed:
        pts = np.vstack([pts, pts[:1]])
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash_attr} stroke-linejoin="round"/>')


def render_overlay(ns: NormalSet, lines: list[tuple[str, np.ndarray]],
                   width_px: int = 900, margin_frac: float = 0.05) -> str:
    """Boundaries plus named racing lines as a standalone SVG document.

    ``lines`` holds (label, (N, 2) world points) pairs drawn over the left
    and right boundary polylines, with a legend in the top-left corner.
    """
    world = [ns.left_ends, ns.right_ends] + [pts for _, pts in lines]
    all_pts = np.vstack(world)
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = margin_frac * float(span.max())
    scale = (width_px - 2) / (span[0] + 2 * pad)
    height_px = int(np.ceil((span[1] + 2 * pad) * scale)) + 2

    def to_px(points: np.ndarray) -> np.ndarray:
        px = (points - lo + pad) * scale
        px[:, 1] = height_px - px[:, 1]  # y grows downward in SVG
        return px

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px}" viewBox="0 0 {width_px} {height_px}">',
        f'<rect width="{width_px}" height="{height_px}" fill="white"/>',
        _polyline(to_px(ns.left_ends), "#555555", 1.5, ns.cyclic),
        _polyline(to_px(ns.right_ends), "#555555", 1.5, ns.cyclic),
    ]
    legend = ['<g font-family="sans-serif" font-size="14">',
              '<text x="12" y="20" fill="#555555">boundaries</text>']
    for k, (label, pts) in enumerate(lines):
        color = _PALETTE[k % len(_PALETTE)]
        dash = None if k == 0 else "6,4"
        parts.append(_polyline(to_px(np.asarray(pts, dtype=float)), color, 2.0,
                               ns.cyclic, dash))
        legend.append(f'<text x="12" y="{40 + 20 * k}" fill="{color}">{label}</text>')
    legend.append("</g>")
    parts.extend(legend)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

"""Deterministic SVG rendering of linkage frames.

Every frame of one call shares the same viewBox (the bounding box of all
frames plus a 5% margin), so a directory of frames plays back as a strip
without jitter.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .chart import ArmChart, CycleChart, embed
from .errors import InvalidInput

__all__ = ["SvgStyle", "render_svg", "write_svgs"]


@dataclass(frozen=True)
class SvgStyle:
    width: int = 480
    height: int = 480
    stroke: str = "#1f3b73"
    stroke_width: float = 0.01  # fraction of the larger viewBox side
    fill: str = "#c9d6ee"
    vertex_color: str = "#b22222"
    vertex_radius: float = 0.012
    margin: float = 0.05


def _num(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _points(frame):
    if isinstance(frame, (ArmChart, CycleChart)):
        return embed(frame)
    pts = np.asarray(frame, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise InvalidInput("each frame must be a chart state or an (n, 2) vertex array")
    return pts


def render_svg(frames, closed: bool = False, style: SvgStyle | None = None) -> list:
    """One SVG document (as a string) per frame."""
    style = style or SvgStyle()
    polys = [_points(f) for f in frames]
    if not polys:
        raise InvalidInput("render_svg needs at least one frame")
    allpts = np.vstack(polys)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    pad = style.margin * span
    x0, y0 = lo[0] - pad, lo[1] - pad
    w, h = (hi[0] - lo[0]) + 2 * pad, (hi[1] - lo[1]) + 2 * pad
    w, h = max(w, 2 * pad), max(h, 2 * pad)
    size = max(w, h)
    sw = style.stroke_width * size
    r = style.vertex_radius * size

    docs = []
    for pts in polys:
        # flip y so the picture has the usual mathematical orientation
        flipped = [(x, y0 + h - (y - y0)) for x, y in pts]
        coords = " ".join(f"{_num(x)},{_num(y)}" for x, y in flipped)
        if closed:
            shape = (f'<polygon points="{coords}" fill="{style.fill}" stroke="{style.stroke}" '
                     f'stroke-width="{_num(sw)}" stroke-linejoin="round"/>')
        else:
            shape = (f'<polyline points="{coords}" fill="none" stroke="{style.stroke}" '
                     f'stroke-width="{_num(sw)}" stroke-linejoin="round" stroke-linecap="round"/>')
        dots = "".join(
            f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}" fill="{style.vertex_color}"/>' for x, y in flipped
        )
        docs.append(
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{style.width}" '
            f'height="{style.height}" viewBox="{_num(x0)} {_num(y0)} {_num(w)} {_num(h)}">\n'
            f"{shape}\n{dots}\n</svg>\n"
        )
    return docs


def write_svgs(docs, directory, prefix: str = "frame") -> list:
    """Write documents as ``<prefix>_0000.svg`` ... and return the paths.

    Raises ``OSError`` when the directory cannot be created or written.
    """
    os.makedirs(directory, exist_ok=True)
    width = max(4, len(str(len(docs) - 1)))
    paths = []
    for i, doc in enumerate(docs):
        path = os.path.join(directory, f"{prefix}_{i:0{width}d}.svg")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
        paths.append(path)
    return paths

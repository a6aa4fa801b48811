"""
Arc-diagram drawings of open meanders as SVG 1.1 or standalone TikZ.

The river is the horizontal baseline and crossing x sits at x * spacing. Every
road segment is a semicircle of diameter |p - q| on its side of the river and
the two rays run straight to the edge of the picture. Rays are vertical
segments, not quarter-curves: the vertical through a ray's point meets no
arc of its side, while a curve bent toward the picture's sides may. Output
depends only on the RenderSpec, so equal specs give equal bytes.
"""

import hashlib
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field

from meander import MeanderError, Side, arch_diagram, format_permutation, validate

logger = logging.getLogger(__name__)


class RenderFormat(str, Enum):
    SVG = "svg"
    TIKZ = "tikz"

    @property
    def extension(self) -> str:
        return "svg" if self is RenderFormat.SVG else "tex"


class RenderSpec(BaseModel):
    perm: List[int]
    spacing: float = Field(default=40.0, gt=0)
    stroke_width: float = Field(default=2.0, gt=0)
    format: RenderFormat = RenderFormat.SVG
    river_color: str = "#1f77b4"
    road_color: str = "#d62728"


def _num(x: float) -> str:
    text = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def _props(**attrs) -> str:
    return " ".join(f'{k.replace("_", "-")}="{_num(v) if isinstance(v, float) else v}"' for k, v in attrs.items())


def _svg(spec: RenderSpec) -> str:
    diagram = arch_diagram(spec.perm)
    n, s = diagram.order, spec.spacing
    half = (n - 1) * s / 2 + s
    width, height = (n + 1) * s, 2 * half
    base = half

    def x(point: int) -> float:
        return float(point * s)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" {_props(width=width, height=height)} '
        f'viewBox="0 0 {_num(width)} {_num(height)}">',
        f"  <title>meander {format_permutation(spec.perm)}</title>",
        f'  <line {_props(x1=0.0, y1=base, x2=width, y2=base, stroke=spec.river_color, stroke_width=spec.stroke_width)}/>',
        f'  <g {_props(fill="none", stroke=spec.road_color, stroke_width=spec.stroke_width)}>',
    ]
    for side in (Side.UPPER, Side.LOWER):
        # sweep 1 bends an arc drawn left to right above the baseline
        sweep = 1 if side is Side.UPPER else 0
        for p, q in sorted(diagram.arcs_on(side)):
            r = (q - p) * s / 2
            lines.append(
                f'    <path d="M {_num(x(p))} {_num(base)} A {_num(r)} {_num(r)} 0 0 {sweep} {_num(x(q))} {_num(base)}"/>'
            )
    for ray in (diagram.entry_ray, diagram.exit_ray):
        end = 0.0 if ray.side is Side.UPPER else height
        lines.append(f'    <line {_props(x1=x(ray.point), y1=base, x2=x(ray.point), y2=end)}/>')
    lines.append("  </g>")
    for point in range(1, n + 1):
        lines.append(f'  <circle {_props(cx=x(point), cy=base, r=spec.stroke_width * 1.5, fill=spec.road_color)}/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _tikz(spec: RenderSpec) -> str:
    diagram = arch_diagram(spec.perm)
    n = diagram.order
    reach = (n - 1) / 2 + 1
    unit = spec.spacing / 28.4527559  # pt per cm
    lines = [
        r"\documentclass[tikz]{standalone}",
        r"\begin{document}",
        f"% meander {format_permutation(spec.perm)}",
        rf"\begin{{tikzpicture}}[x={_num(unit)}cm, y={_num(unit)}cm, line width={_num(spec.stroke_width * 0.4)}pt]",
        rf"  \draw[blue] (0,0) -- ({n + 1},0);",
    ]
    for side in (Side.UPPER, Side.LOWER):
        end = 0 if side is Side.UPPER else 360
        for p, q in sorted(diagram.arcs_on(side)):
            lines.append(rf"  \draw[red] ({p},0) arc[start angle=180, end angle={end}, radius={_num((q - p) / 2)}];")
    for ray in (diagram.entry_ray, diagram.exit_ray):
        end = reach if ray.side is Side.UPPER else -reach
        lines.append(rf"  \draw[red] ({ray.point},0) -- ({ray.point},{_num(end)});")
    lines += [r"\end{tikzpicture}", r"\end{document}"]
    return "\n".join(lines) + "\n"


def render_arc_diagram(spec: RenderSpec) -> str:
    if not validate(spec.perm):
        raise MeanderError(f"Not a meandric permutation: {format_permutation(spec.perm)}")
    return _svg(spec) if spec.format is RenderFormat.SVG else _tikz(spec)


def render_file_name(spec: RenderSpec) -> str:
    digest = hashlib.sha1(f"{format_permutation(spec.perm)}|{spec.format.value}".encode("utf-8")).hexdigest()[:10]
    return f"meander_{len(spec.perm)}_{digest}.{spec.format.extension}"


def save_render(spec: RenderSpec, out: Optional[Path] = None) -> Path:
    """Write the drawing to `out`; a directory (or None, the working directory) gets the conventional file name."""
    document = render_arc_diagram(spec)
    path = Path(out) if out is not None else Path.cwd()
    if path.is_dir() or out is None:
        path = path / render_file_name(spec)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document, encoding="utf-8")
    logger.info(f"Arc diagram saved: {path}")
    return path

"""Phase-plane rendering of a tile decomposition as SVG.

One rectangle per tile: horizontal extent is the hull of the tile's cube,
vertical extent the frequency hull of its patch.  Fill color is keyed by
the decomposition cell (forest or antichain index); the exceptional set
is shaded along the bottom band.  Only 1-D spaces with linear phases are
renderable.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .decompose import Decomposition
from .tiles import TileStructure

_W, _H = 960, 640
_MARGIN = 50


def _color(idx: int) -> str:
    hue = (idx * 47) % 360
    return f"hsl({hue},65%,55%)"


def render_svg(dec: Optional[Decomposition], ts: TileStructure, path: str) -> None:
    """Write the phase-plane diagram; raises for non-renderable scenarios."""
    sp = ts.space
    fam = ts.family
    if sp.kind not in ("integer_interval", "integer_torus") or fam.freqs is None:
        raise ValueError("not renderable: need a 1-D space with linear phases")
    n = sp.n
    freqs = fam.freqs
    fmin, fmax = int(freqs.min()), int(freqs.max()) + 1

    cell_of: dict[int, tuple] = {}
    legend: list[tuple] = []
    if dec is not None:
        for fi, forest in enumerate(dec.forests):
            key = ("forest", forest.n, fi)
            legend.append(key)
            for t in forest.all_tiles():
                cell_of[t] = key
        for ai, ac in enumerate(dec.antichains):
            key = ("antichain", ac.n, ac.j)
            legend.append(key)
            for t in ac.tiles:
                cell_of[t] = key
    palette = {key: _color(i) for i, key in enumerate(sorted(set(legend)))}

    def xmap(v: float) -> float:
        return _MARGIN + (v / n) * (_W - 2 * _MARGIN)

    def ymap(v: float) -> float:
        return _H - _MARGIN - ((v - fmin) / max(fmax - fmin, 1)) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_H-_MARGIN}" x2="{_W-_MARGIN}" y2="{_H-_MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_H-_MARGIN}" stroke="black"/>',
    ]
    if dec is not None:
        gp = np.nonzero(dec.gprime)[0].tolist()
        for x in gp:
            parts.append(
                f'<rect x="{xmap(x):.2f}" y="{_H-_MARGIN:.2f}" width="{xmap(x+1)-xmap(x):.2f}" '
                f'height="{_MARGIN/2:.2f}" fill="#999" opacity="0.8"/>'
            )
    for t in ts.tiles:
        mem = ts.members(t.id)
        x0, x1 = int(mem.min()), int(mem.max()) + 1
        om = sorted(t.omega)
        fvals = [int(freqs[i]) for i in om]
        y0, y1 = min(fvals), max(fvals) + 1
        key = cell_of.get(t.id)
        fill = palette.get(key, "#dddddd")
        parts.append(
            f'<rect x="{xmap(x0):.2f}" y="{ymap(y1):.2f}" width="{xmap(x1)-xmap(x0):.2f}" '
            f'height="{ymap(y0)-ymap(y1):.2f}" fill="{fill}" fill-opacity="0.45" '
            f'stroke="#333" stroke-width="0.4"/>'
        )
    ly = _MARGIN / 2
    for i, key in enumerate(sorted(set(legend))):
        kind, nn, jj = key
        parts.append(
            f'<rect x="{_MARGIN + i*150:.2f}" y="{ly-10:.2f}" width="12" height="12" fill="{palette[key]}"/>'
            f'<text x="{_MARGIN + i*150 + 16:.2f}" y="{ly:.2f}" font-size="11">{kind} (n={nn},j={jj})</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")

"""Rendering of figure data: minimal SVG paths and matplotlib PNGs."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .figures import FigureData, simplex_to_plane


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    Path(path).write_text(buf.getvalue())


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


_SVG_COLOURS = {"black": "#000", "white": "#bbb", "blue": "#1f5fbf", "red": "#c0392b",
                "tab:blue": "#1f77b4", "tab:red": "#d62728"}


def _svg_colour(style: str) -> str:
    if style in _SVG_COLOURS:
        return _SVG_COLOURS[style]
    try:
        g = int(round(float(style) * 255))
        return f"#{g:02x}{g:02x}{g:02x}"
    except ValueError:
        return "#444"


def svg_curves(series, width: int = 400, height: int = 400, pad: int = 20) -> str:
    """Polylines in an axis box; ``series`` is a list of (name, Nx2 array, style)."""
    allpts = np.vstack([s[1] for s in series])
    x0, y0 = np.nanmin(allpts, axis=0)
    x1, y1 = np.nanmax(allpts, axis=0)
    x0, y0 = min(x0, 0.0), min(y0, 0.0)
    sx = (width - 2 * pad) / max(x1 - x0, 1e-12)
    sy = (height - 2 * pad) / max(y1 - y0, 1e-12)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<path d="M{pad},{pad} H{width - pad} V{height - pad} H{pad} Z" fill="none" stroke="#999"/>']
    for name, pts, style in series:
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        if not len(pts):
            continue
        coords = [f"{pad + (x - x0) * sx:.2f},{height - pad - (y - y0) * sy:.2f}" for x, y in pts]
        dash = ' stroke-dasharray="4,3"' if style in ("dashed", "dotted") else ""
        out.append(f'<path d="M{" L".join(coords)}" fill="none" stroke="{_svg_colour(style)}"{dash}>'
                   f"<title>{name}</title></path>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(fig: FigureData, outdir: Path) -> list[Path]:
    paths = []
    for k, panel in enumerate(fig.panels):
        if "series" not in panel:
            continue
        p = outdir / f"figure{fig.figure}_panel{k + 1}.svg"
        p.write_text(svg_curves(panel["series"]))
        paths.append(p)
    return paths


def _mpl_style(style: str) -> dict:
    if style == "dashed":
        return {"color": "0.3", "linestyle": "--"}
    if style == "dotted":
        return {"color": "0.3", "linestyle": ":"}
    if style == "white":
        return {"color": "0.6", "linestyle": "-"}
    return {"color": style}


def write_png(fig: FigureData, outdir: Path, dpi: int = 120) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import matplotlib.tri as mtri
    from matplotlib.colors import LogNorm

    n = len(fig.panels)
    cols = 3 if fig.figure == 1 else 2
    rows = math.ceil(n / cols)
    f, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 4.0 * rows), squeeze=False)
    for ax, panel in zip(axes.flat, fig.panels):
        kind = panel["kind"]
        ax.set_title(panel["title"], fontsize=9)
        if kind == "simplex_heat":
            xy = simplex_to_plane(panel["points"])
            tri = mtri.Triangulation(xy[:, 0], xy[:, 1])
            vals = np.clip(panel["values"], 1e-6, None)
            ax.tripcolor(tri, vals, shading="gouraud", cmap="inferno", norm=LogNorm())
            ax.set_aspect("equal")
            ax.axis("off")
            continue
        if kind == "zonoid":
            for name, pts, style in panel["series"]:
                closed = np.vstack([[0.0, 0.0], pts, [0.0, 0.0]])
                if style not in ("white", "dashed", "dotted"):
                    ax.fill(closed[:, 0], closed[:, 1], alpha=0.15, **{"color": style})
                ax.plot(closed[:, 0], closed[:, 1], label=name, lw=1.2, **_mpl_style(style))
            ax.set_xlim(0, 1.05)
            ax.set_ylim(0, 1.05)
            ax.set_aspect("equal")
        else:
            for name, pts, style in panel["series"]:
                ax.plot(pts[:, 0], pts[:, 1], label=name, lw=1.2, **_mpl_style(style))
            if kind == "return_level":
                ax.set_xscale("log")
                ax.set_xlabel("return period")
            elif kind == "cdf":
                ax.set_xlabel("Gumbel scale")
        ax.legend(fontsize=6, frameon=False)
    for ax in list(axes.flat)[n:]:
        ax.axis("off")
    f.suptitle(f"Figure {fig.figure}: {fig.title}", fontsize=10)
    f.tight_layout()
    path = outdir / f"figure{fig.figure}.png"
    # fixed metadata keeps reruns byte-identical
    f.savefig(path, dpi=dpi, metadata={"Software": None})
    plt.close(f)
    return path

"""Data behind the seven standard figures, as named tables of rows.

Each builder returns a :class:`FigureData`: CSV-ready tables, the curves to
draw (for SVG and PNG rendering) and a description of the inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import models as M
from . import projections as P
from . import zonoid as Z
from .coeffs import associated_choquet

SYMMETRIC_SETS = ((1.5, 1.5, 1.5), (3.0, 3.0, 3.0), (12.0, 12.0, 12.0))
ASYMMETRIC_SETS = ((1.5, 1.5, 1.5), (1.5, 3.0, 12.0), (1.5, 12.0, 96.0))
# left to right in increasing dependence
COLOURS = ("black", "blue", "red")
SYMMETRIC_ZONOID_ALPHAS = (0.0625, 0.25, 1.0, 4.0)
NON_NESTED_PAIR = ((0.15, 12.0), (4.0, 0.2))
ASYMMETRIC_CHAIN = ((0.25, 0.25), (1.0, 0.25), (1.0, 1.0), (1.0, 4.0), (4.0, 4.0))
HR_ROOT_GAMMAS = (0.5, 1.0, 2.0, 4.0)


@dataclass
class FigureData:
    figure: int
    title: str
    tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    panels: list[dict] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)


def _label(alpha) -> str:
    return "(" + ",".join(f"{a:g}" for a in alpha) + ")"


def _zonoid_rows(series):
    rows = []
    for name, poly in series:
        angles = poly.angles
        for k, (x1, x2) in enumerate(poly.points):
            if angles is None or k == 0 or k == len(poly.points) - 1:
                a = float("nan")
            else:
                a = float(angles[k - 1])
            rows.append((name, a, float(x1), float(x2)))
    return ["series", "alpha", "x1", "x2"], rows


def _pickands_rows(series):
    rows = []
    for name, (t, A) in series:
        rows.extend((name, float(a), float(b)) for a, b in zip(t, A))
    return ["series", "t", "pickands"], rows


def _zonoid_figure(number: int, title: str, entries, n_angles: int) -> FigureData:
    """entries: list of (name, model, style)."""
    polys = [(name, Z.polyline(m, n_angles)) for name, m, _ in entries]
    curves = [(name, Z.pickands_curve(m)) for name, m, _ in entries]
    fig = FigureData(number, title)
    fig.tables["zonoids"] = _zonoid_rows(polys)
    fig.tables["pickands"] = _pickands_rows(curves)
    styles = {name: style for name, _, style in entries}
    fig.panels.append({
        "kind": "zonoid",
        "title": "max-zonoids",
        "series": [(n, p.points, styles[n]) for n, p in polys],
    })
    fig.panels.append({
        "kind": "pickands",
        "title": "Pickands dependence functions",
        "series": [(n, np.column_stack(c), styles[n]) for n, c in curves],
    })
    fig.inputs = {"models": {name: M.model_to_json(m) for name, m, _ in entries}, "n_angles": n_angles}
    return fig


def _shade(k: int, n: int) -> str:
    g = 0.15 + 0.7 * k / max(n - 1, 1)
    return f"{g:.3f}"


def figure1(m: int = 60, **_) -> FigureData:
    """Angular densities of six trivariate Dirichlet models on an interior lattice."""
    fig = FigureData(1, "Dirichlet angular densities")
    k = np.array([(i, j, m - i - j) for i in range(1, m) for j in range(1, m - i)], dtype=float)
    W = k / m
    rows = []
    sets = [("sym" + _label(a), a) for a in SYMMETRIC_SETS] + [("asym" + _label(a), a) for a in ASYMMETRIC_SETS]
    for name, alpha in sets:
        h = np.array([M.dirichlet_angular_density(alpha, w) for w in W])
        rows.extend((name, *map(float, w), float(v)) for w, v in zip(W, h))
        fig.panels.append({"kind": "simplex_heat", "title": name, "points": W, "values": h})
    fig.tables["densities"] = (["series", "w1", "w2", "w3", "density"], rows)
    fig.inputs = {"alphas": [list(a) for _, a in sets], "lattice_m": m}
    return fig


def figure2(n_angles: int = 720, mc_n: int = M.DEFAULT_MC_N, seed: int = 0, **_) -> FigureData:
    diri = M.Dirichlet((30.0, 0.2))
    entries = [
        ("dependent", M.FullyDependent(2), "black"),
        ("dirichlet(30,0.2)", diri, "0.35"),
        ("choquet_of_dirichlet(30,0.2)", associated_choquet(diri, mc_n, seed), "0.7"),
        ("independent", M.Independent(2), "white"),
    ]
    return _zonoid_figure(2, "Dirichlet (30, 0.2) between full dependence and independence", entries, n_angles)


def figure3(n_angles: int = 720, **_) -> FigureData:
    n = len(SYMMETRIC_ZONOID_ALPHAS)
    top = [("dependent", M.FullyDependent(2), "black")] + [
        (f"dirichlet({a:g},{a:g})", M.Dirichlet((a, a)), _shade(n - 1 - k, n))
        for k, a in enumerate(SYMMETRIC_ZONOID_ALPHAS)
    ]
    fig = _zonoid_figure(3, "Symmetric Dirichlet family and a non-nested pair", top, n_angles)
    bottom = [("dirichlet" + _label(a), M.Dirichlet(a), c) for a, c in zip(NON_NESTED_PAIR, ("tab:blue", "tab:red"))]
    extra = _zonoid_figure(3, "", bottom, n_angles)
    for key in ("zonoids", "pickands"):
        fig.tables[key] = (fig.tables[key][0], fig.tables[key][1] + extra.tables[key][1])
    for p in extra.panels:
        p["title"] = "non-nested: " + p["title"]
    fig.panels.extend(extra.panels)
    fig.inputs["models"].update(extra.inputs["models"])
    return fig


def figure4(n_angles: int = 720, **_) -> FigureData:
    n = len(ASYMMETRIC_CHAIN)
    entries = [
        ("dirichlet" + _label(a), M.Dirichlet(a), _shade(n - 1 - k, n))
        for k, a in enumerate(ASYMMETRIC_CHAIN)
    ]
    return _zonoid_figure(4, "Asymmetric Dirichlet chain", entries, n_angles)


def figure7(n_angles: int = 720, **_) -> FigureData:
    n = len(HR_ROOT_GAMMAS)
    entries = [
        (f"husler_reiss(sqrt_gamma={r:g})", M.HuslerReiss.bivariate(r * r), _shade(n - 1 - k, n))
        for k, r in enumerate(HR_ROOT_GAMMAS)
    ]
    return _zonoid_figure(7, "Bivariate Huesler-Reiss family", entries, n_angles)


def _projection_figure(number: int, kind: str, mc_n: int, seed: int) -> FigureData:
    fig = FigureData(number, f"{kind}(X1, X2, X3) of trivariate Dirichlet models, Gumbel scale")
    a = np.ones(3)
    t = P.t_grid(0.05, 200.0, 200)
    periods = np.geomspace(10.0, 100.0, 50)
    cdf_rows, rl_rows = [], []
    bounds = [("dependent", M.FullyDependent(3), "dashed"), ("independent", M.Independent(3), "dotted")]
    groups = [("sym", SYMMETRIC_SETS), ("asym", ASYMMETRIC_SETS)]
    for group, sets in groups:
        cdf_series, rl_series = [], []
        entries = [(group + _label(al), M.Dirichlet(al), c) for al, c in zip(sets, COLOURS)]
        entries += [(group + "_" + n, m, s) for n, m, s in bounds]
        for name, model, style in entries:
            curve = P.projection_curve(model, a, kind, t, "gumbel", mc_n, seed)
            rl = P.return_level_curve(model, a, kind, periods, "gumbel", mc_n, seed)
            cdf_rows.extend((name, float(x), float(f)) for x, f in zip(curve.t, curve.F))
            rl_rows.extend((name, float(r), float(q)) for r, q in zip(rl.periods, rl.levels))
            cdf_series.append((name, np.column_stack([curve.t, curve.F]), style))
            rl_series.append((name, np.column_stack([rl.periods, rl.levels]), style))
        fig.panels.append({"kind": "cdf", "title": f"{group}: distribution function", "series": cdf_series})
        fig.panels.append({"kind": "return_level", "title": f"{group}: return levels", "series": rl_series})
    fig.tables["cdf"] = (["series", "gumbel_x", "F"], cdf_rows)
    fig.tables["return_levels"] = (["series", "return_period", "level"], rl_rows)
    fig.inputs = {
        "symmetric": [list(s) for s in SYMMETRIC_SETS],
        "asymmetric": [list(s) for s in ASYMMETRIC_SETS],
        "weights": a.tolist(),
        "mc_n": mc_n,
        "seed": seed,
    }
    return fig


def figure5(mc_n: int = M.DEFAULT_MC_N, seed: int = 0, **_) -> FigureData:
    return _projection_figure(5, "min", mc_n, seed)


def figure6(mc_n: int = M.DEFAULT_MC_N, seed: int = 0, **_) -> FigureData:
    return _projection_figure(6, "max", mc_n, seed)


BUILDERS = {1: figure1, 2: figure2, 3: figure3, 4: figure4, 5: figure5, 6: figure6, 7: figure7}


def build(number: int, **kwargs) -> FigureData:
    if number not in BUILDERS:
        raise KeyError(f"unknown figure {number}; choose from {sorted(BUILDERS)}")
    return BUILDERS[number](**kwargs)


def simplex_to_plane(W: np.ndarray) -> np.ndarray:
    """Barycentric coordinates on the 2-simplex to an equilateral triangle."""
    return np.column_stack([W[:, 1] + 0.5 * W[:, 2], (math.sqrt(3) / 2) * W[:, 2]])

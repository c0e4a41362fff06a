"""Bivariate max-zonoids: boundary curves, support functions and nesting.

The max-zonoid K of a bivariate model is the convex body whose support
function on the nonnegative quadrant is ell.  For a differentiable ell the
upper-right boundary of K is traced by the envelope of the supporting lines
<k, (cos a, sin a)> = L(a), L(a) = ell(cos a, sin a); the touching point at
angle a is

    x1 = cos(a) L + sin(a)^2 L1 - sin(a) cos(a) L2
    x2 = sin(a) L - sin(a) cos(a) L1 + cos(a)^2 L2

with L1, L2 the partial derivatives of ell at (cos a, sin a).  Piecewise
linear models (Choquet, independent, fully dependent) are polygons and are
built from their vertices instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import models as M
from .core import DimensionError, MaxStabError
from .coeffs import choquet_polygon_vertices

FD_STEP = 1e-6


@dataclass(frozen=True)
class ZonoidPolyline:
    """Boundary points of a bivariate max-zonoid, ordered from (1, 0) to (0, 1).

    ``angles`` lists the normal angle of each interior point for envelope
    curves and is None for polygons given by vertices.
    """

    points: np.ndarray = field(repr=False)
    angles: np.ndarray | None = field(default=None, repr=False)
    kind: str = "envelope"
    label: str = ""

    def vertices(self) -> np.ndarray:
        """Boundary points plus the origin, enough for support functions on x >= 0."""
        return np.vstack([[0.0, 0.0], self.points])


def _require_bivariate(model):
    if model.dim != 2:
        raise DimensionError("max-zonoid boundaries are computed for d = 2 only")


def hr_gradient(gamma12: float, x1, x2):
    """Partial derivatives of the bivariate HR ell."""
    return M.hr_partial(np.asarray(x1) / np.asarray(x2), gamma12), M.hr_partial(
        np.asarray(x2) / np.asarray(x1), gamma12
    )


def gradient(model, x1: float, x2: float) -> tuple[float, float]:
    """(d ell / d x1, d ell / d x2) at a point of the open quadrant."""
    if isinstance(model, M.HuslerReiss):
        g = model.gamma.gamma[0][1]
        if g == 0:
            raise MaxStabError("the fully dependent HR limit is not differentiable")
        a, b = hr_gradient(g, x1, x2)
        return float(a), float(b)
    if isinstance(model, M.Dirichlet):
        return M.dirichlet_bivariate(*model.alpha).partials(x1, x2)
    # central differences, relative step
    h1 = FD_STEP * max(x1, 1e-300)
    h2 = FD_STEP * max(x2, 1e-300)
    f = lambda y1, y2: M.ell(model, [y1, y2]).value
    return (
        (f(x1 + h1, x2) - f(x1 - h1, x2)) / (2 * h1),
        (f(x1, x2 + h2) - f(x1, x2 - h2)) / (2 * h2),
    )


def envelope_bivariate(model, n_angles: int = 720) -> ZonoidPolyline:
    """Boundary curve of a smooth bivariate max-zonoid at ``n_angles`` normal angles."""
    _require_bivariate(model)
    if M.as_choquet(model) is not None:
        raise MaxStabError(
            "piecewise linear model: use choquet_polyline (halfspace description) instead"
        )
    if not model.exact:
        raise MaxStabError("envelope needs an exactly evaluable ell")
    if n_angles < 2:
        raise MaxStabError("need at least two angles")
    eps = math.pi / (8 * n_angles)
    ang = np.linspace(eps, math.pi / 2 - eps, n_angles)
    c, s = np.cos(ang), np.sin(ang)
    L = M.ell_batch(model, np.column_stack([c, s]))[0]
    if isinstance(model, M.HuslerReiss):
        g = model.gamma.gamma[0][1]
        # L1 = Ltilde(cot a), L2 = Ltilde(tan a)
        L1 = M.hr_partial(c / s, g)
        L2 = M.hr_partial(s / c, g)
    elif isinstance(model, M.Dirichlet):
        L1, L2 = M.dirichlet_bivariate(*model.alpha).partials_many(c, s)
    else:
        grads = np.array([gradient(model, ci, si) for ci, si in zip(c, s)])
        L1, L2 = grads[:, 0], grads[:, 1]
    x1 = c * L + s * s * L1 - s * c * L2
    x2 = s * L - s * c * L1 + c * c * L2
    pts = np.vstack([[1.0, 0.0], np.column_stack([x1, x2]), [0.0, 1.0]])
    return ZonoidPolyline(pts, ang, "envelope", _label(model))


def choquet_polyline(model) -> ZonoidPolyline:
    """Polygon of a bivariate Choquet-type model from its vertices."""
    _require_bivariate(model)
    ch = M.as_choquet(model)
    if ch is None:
        raise MaxStabError("model is not of Choquet type")
    verts = choquet_polygon_vertices(ch.theta)[1:]
    return ZonoidPolyline(verts, None, "polygon", _label(model))


def polyline(model, n_angles: int = 720) -> ZonoidPolyline:
    if M.as_choquet(model) is not None:
        return choquet_polyline(model)
    return envelope_bivariate(model, n_angles)


def box_polyline() -> ZonoidPolyline:
    return choquet_polyline(M.Independent(2))


def simplex_polyline() -> ZonoidPolyline:
    return choquet_polyline(M.FullyDependent(2))


def _label(model) -> str:
    if isinstance(model, M.Dirichlet):
        return "dirichlet(" + ",".join(f"{a:g}" for a in model.alpha) + ")"
    if isinstance(model, M.HuslerReiss):
        return f"husler_reiss(gamma={model.gamma.gamma[0][1]:g})"
    return model.family


def support_function_of_polyline(poly: ZonoidPolyline, x) -> float | np.ndarray:
    """max over boundary points k of <x, k> for x >= 0 (or rows of x)."""
    x = np.asarray(x, dtype=float)
    vals = np.atleast_2d(x) @ poly.vertices().T
    out = vals.max(axis=1)
    return float(out[0]) if x.ndim == 1 else out


def nesting_check(inner: ZonoidPolyline, outer: ZonoidPolyline, n_dirs: int = 721,
                  tol: float = 1e-6):
    """Is ``inner`` contained in ``outer``?

    Compares support functions over ``n_dirs`` unit directions of the
    nonnegative quadrant.  Returns (contained, worst violation), the latter
    being max(h_inner - h_outer) over the directions.
    """
    if inner.angles is not None and outer.angles is not None:
        if inner.angles.shape != outer.angles.shape or not np.allclose(inner.angles, outer.angles):
            raise MaxStabError("polylines were computed on different angle grids")
    phi = np.linspace(0.0, math.pi / 2, n_dirs)
    U = np.column_stack([np.cos(phi), np.sin(phi)])
    diff = support_function_of_polyline(inner, U) - support_function_of_polyline(outer, U)
    worst = float(diff.max())
    return worst <= tol, worst


def pickands_curve(model, n: int = 201) -> tuple[np.ndarray, np.ndarray]:
    """Pickands function t -> ell(1 - t, t) on an equispaced grid of [0, 1]."""
    _require_bivariate(model)
    t = np.linspace(0.0, 1.0, n)
    return t, M.ell_batch(model, np.column_stack([1.0 - t, t]))[0]

"""Exact coefficient algebra of the Choquet (Tawn-Molchanov) model.

Three equivalent parametrisations live on the nonempty subsets of {1..d}:

* ``theta`` -- extremal coefficients, theta(A) = E max_{i in A} Z_i
* ``chi``   -- tail dependence coefficients, chi(A) = E min_{i in A} Z_i
* ``tau``   -- mass of the discrete spectral measure on the ray through e_A

All conversions are linear subset transforms evaluated with the
O(d 2^d) zeta/Moebius recursions from :mod:`maxstab.core`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    EXACT_DIM_CAP,
    DimensionError,
    TableError,
    as_bits,
    full_mask,
    indices_to_mask,
    mask_to_indices,
    moebius_supersets,
    popcounts,
    zeta_subsets,
    zeta_supersets,
)

KINDS = ("theta", "chi", "tau")


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Dense set function on the nonempty subsets of {1..dim}.

    ``values[0]`` is the empty set and always 0.
    """

    dim: int
    kind: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TableError(f"unknown table kind {self.kind!r}")
        if not 1 <= self.dim <= EXACT_DIM_CAP:
            raise DimensionError(f"exact subset algebra supports 1 <= d <= {EXACT_DIM_CAP}")
        v = np.array(self.values, dtype=float)
        if v.shape != (1 << self.dim,):
            raise TableError(f"table needs {1 << self.dim} entries, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise TableError("table has non-finite entries")
        v[0] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, A) -> float:
        bits = as_bits(A, self.dim)
        if bits == 0:
            raise TableError("tables are defined on nonempty subsets only")
        return float(self.values[bits])

    def __eq__(self, other):
        if not isinstance(other, CoefficientTable):
            return NotImplemented
        return (self.dim, self.kind) == (other.dim, other.kind) and np.array_equal(
            self.values, other.values
        )

    def allclose(self, other: "CoefficientTable", atol: float = 1e-12) -> bool:
        return self.kind == other.kind and self.dim == other.dim and bool(
            np.allclose(self.values, other.values, rtol=0, atol=atol)
        )

    def to_dict(self) -> dict[str, float]:
        """JSON-friendly mapping ``"[1,2]" -> value``."""
        return {
            "[" + ",".join(map(str, mask_to_indices(b))) + "]": float(self.values[b])
            for b in range(1, 1 << self.dim)
        }

    @classmethod
    def from_dict(cls, mapping: dict, dim: int, kind: str, default: float | None = None):
        """Parse a mapping of subsets to values.

        Keys may be index tuples, masks, or strings such as ``"[1,2]"``,
        ``"1,2"`` or ``"{1, 2}"``.  Missing subsets take ``default`` or raise.
        """
        import re

        values = np.full(1 << dim, np.nan if default is None else float(default))
        values[0] = 0.0
        for key, value in mapping.items():
            if isinstance(key, str):
                idx = [int(t) for t in re.findall(r"\d+", key)]
                if not idx:
                    raise TableError(f"cannot parse subset key {key!r}")
                bits = indices_to_mask(idx, dim)
            else:
                bits = as_bits(key, dim)
            if bits == 0:
                raise TableError("the empty set carries no coefficient")
            values[bits] = float(value)
        missing = np.flatnonzero(np.isnan(values))
        if missing.size:
            raise TableError(
                f"{kind} table missing subset {list(mask_to_indices(int(missing[0])))}"
            )
        return cls(dim, kind, values)

    @classmethod
    def exchangeable(cls, dim: int, kind: str, by_size) -> "CoefficientTable":
        """Table whose entries depend on |A| only; ``by_size[k-1]`` is the value at |A| = k."""
        by_size = list(by_size)
        if len(by_size) != dim:
            raise TableError(f"need {dim} level values, got {len(by_size)}")
        sizes = popcounts(dim)
        values = np.array([0.0] + [by_size[k - 1] for k in sizes[1:]])
        return cls(dim, kind, values)


def _expect(table: CoefficientTable, kind: str):
    if table.kind != kind:
        raise TableError(f"expected a {kind} table, got {table.kind}")


def _signed(values: np.ndarray, d: int) -> np.ndarray:
    """f(I) -> (-1)**(|I|+1) f(I)."""
    sizes = popcounts(d)
    return np.where(sizes % 2 == 1, values, -values)


def inclusion_exclusion(values: np.ndarray, d: int) -> np.ndarray:
    """T f(A) = sum over nonempty I in A of (-1)**(|I|+1) f(I); an involution."""
    v = np.array(values, dtype=float)
    v[0] = 0.0
    out = zeta_subsets(_signed(v, d), d)
    out[0] = 0.0
    return out


def theta_to_chi(t: CoefficientTable) -> CoefficientTable:
    _expect(t, "theta")
    return CoefficientTable(t.dim, "chi", inclusion_exclusion(t.values, t.dim))


def chi_to_theta(c: CoefficientTable) -> CoefficientTable:
    _expect(c, "chi")
    return CoefficientTable(c.dim, "theta", inclusion_exclusion(c.values, c.dim))


def theta_to_tau(t: CoefficientTable) -> CoefficientTable:
    """tau(A) = sum over I in A of (-1)**(|I|+1) theta(I union A^c)."""
    _expect(t, "theta")
    d = t.dim
    full = full_mask(d)
    # superset Moebius of theta evaluated at the complement, negated
    m = moebius_supersets(t.values, d)
    idx = np.arange(1 << d)
    tau = -m[full ^ idx]
    tau[0] = 0.0
    return CoefficientTable(d, "tau", tau)


def tau_to_theta(m: CoefficientTable) -> CoefficientTable:
    """theta(A) = sum of tau(K) over K meeting A."""
    _expect(m, "tau")
    d = m.dim
    full = full_mask(d)
    below = zeta_subsets(m.values, d)
    idx = np.arange(1 << d)
    theta = below[full] - below[full ^ idx]
    theta[0] = 0.0
    return CoefficientTable(d, "theta", theta)


def tau_to_chi(m: CoefficientTable) -> CoefficientTable:
    """chi(A) = sum of tau(K) over K containing A."""
    _expect(m, "tau")
    chi = zeta_supersets(m.values, m.dim)
    chi[0] = 0.0
    return CoefficientTable(m.dim, "chi", chi)


def chi_to_tau(c: CoefficientTable) -> CoefficientTable:
    """tau(A) = sum over K containing A of (-1)**|K \\ A| chi(K)."""
    _expect(c, "chi")
    v = np.array(c.values, dtype=float)
    v[0] = 0.0
    tau = moebius_supersets(v, c.dim)
    tau[0] = 0.0
    return CoefficientTable(c.dim, "tau", tau)


_DIRECT = {
    ("theta", "chi"): theta_to_chi,
    ("chi", "theta"): chi_to_theta,
    ("theta", "tau"): theta_to_tau,
    ("tau", "theta"): tau_to_theta,
    ("tau", "chi"): tau_to_chi,
    ("chi", "tau"): chi_to_tau,
}


def convert(table: CoefficientTable, kind: str) -> CoefficientTable:
    """Convert a table to any of the three kinds."""
    if kind not in KINDS:
        raise TableError(f"unknown table kind {kind!r}")
    if table.kind == kind:
        return table
    return _DIRECT[(table.kind, kind)](table)


class ChoquetValidationError(TableError):
    """Raised when a table is not the coefficient table of a max-stable law."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def check_choquet_table(table: CoefficientTable, tol: float = 1e-9) -> CoefficientTable:
    """Return the tau table of a valid Choquet model or raise with diagnostics.

    Nothing is clamped or renormalised: a table is either accepted as is or
    rejected.
    """
    tau = convert(table, "tau")
    d = tau.dim
    negatives = [
        (list(mask_to_indices(b)), float(tau.values[b]))
        for b in range(1, 1 << d)
        if tau.values[b] < -tol
    ]
    if negatives:
        raise ChoquetValidationError(
            f"not union-completely alternating: tau{negatives[0][0]} = {negatives[0][1]:.6g}",
            {"negative_tau": negatives},
        )
    margins = tau_marginals(tau)
    bad = [(i + 1, float(s)) for i, s in enumerate(margins) if abs(s - 1.0) > tol]
    if bad:
        raise ChoquetValidationError(
            f"marginal constraint fails for component {bad[0][0]}: sum of tau = {bad[0][1]:.6g}",
            {"marginal_sums": bad},
        )
    return tau


def tau_marginals(tau: CoefficientTable) -> np.ndarray:
    """sum of tau(K) over K containing i, for every component i."""
    chi = zeta_supersets(tau.values, tau.dim)
    return np.array([chi[1 << i] for i in range(tau.dim)])


def validate_choquet(table: CoefficientTable, tol: float = 1e-9, provenance: dict | None = None):
    """Validate a theta/chi/tau table and return a Choquet model."""
    from .models import Choquet

    tau = check_choquet_table(table, tol)
    return Choquet(tau, tol=tol, provenance=provenance or {})


def choquet_ell_spectral(tau: CoefficientTable, x) -> np.ndarray:
    """sum_A tau(A) max_{i in A} x_i; ``x`` may be a single point or a (k, d) batch."""
    _expect(tau, "tau")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = tau.dim
    # running max over masks: max_{i in A} x_i built from the lowest set bit
    mx = np.zeros((x.shape[0], 1 << d))
    for b in range(1, 1 << d):
        low = b & -b
        i = low.bit_length() - 1
        rest = b ^ low
        mx[:, b] = x[:, i] if rest == 0 else np.maximum(x[:, i], mx[:, rest])
    return mx @ tau.values


def choquet_ell_layers(theta: CoefficientTable, x) -> np.ndarray:
    """Choquet integral int_0^inf theta({i : x_i >= t}) dt via sorted layers."""
    _expect(theta, "theta")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    order = np.argsort(-x, axis=1, kind="stable")
    xs = np.take_along_axis(x, order, axis=1)
    gaps = xs - np.concatenate([xs[:, 1:], np.zeros((x.shape[0], 1))], axis=1)
    masks = np.cumsum(np.left_shift(1, order), axis=1)
    return np.sum(gaps * theta.values[masks], axis=1)


def choquet_ell(tau: CoefficientTable, x, check: bool = True):
    """Exact stable tail dependence function of a Choquet model.

    Both the spectral form and the layer-cake Choquet integral are evaluated
    and required to agree to 1e-12 (relative to the size of ``x``).
    """
    spectral = choquet_ell_spectral(tau, x)
    if check:
        layers = choquet_ell_layers(tau_to_theta(tau), x)
        scale = np.maximum(1.0, np.abs(np.atleast_2d(x)).sum(axis=1))
        if np.any(np.abs(spectral - layers) > 1e-12 * scale):
            raise ArithmeticError("spectral and layer Choquet integrals disagree")
    if np.ndim(x) == 1:
        return float(spectral[0])
    return spectral


def choquet_zonoid_halfspaces(theta: CoefficientTable) -> list[tuple[np.ndarray, float]]:
    """Halfspaces <k, e_A> <= theta(A) describing the Choquet max-zonoid
    (intersected with the nonnegative orthant)."""
    _expect(theta, "theta")
    d = theta.dim
    out = []
    for b in range(1, 1 << d):
        normal = np.array([(b >> i) & 1 for i in range(d)], dtype=float)
        out.append((normal, float(theta.values[b])))
    return out


def choquet_polygon_vertices(theta: CoefficientTable) -> np.ndarray:
    """Vertices (counter-clockwise from the origin) of a bivariate Choquet max-zonoid."""
    _expect(theta, "theta")
    if theta.dim != 2:
        raise DimensionError("polygon vertices are provided for d = 2 only")
    t = theta[3]
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, t - 1.0], [t - 1.0, 1.0], [0.0, 1.0]])


def associated_choquet(model, mc_n: int = 100_000, seed: int = 0):
    """Choquet model sharing the extremal coefficients of ``model``.

    For Monte Carlo families the extremal coefficients are estimated from a
    single generator sample; the estimated table is validated with tolerance
    three times its largest standard error and the errors are recorded in the
    result's provenance.
    """
    from . import models

    d = model.dim
    if d > EXACT_DIM_CAP:
        raise DimensionError(f"associated Choquet model needs d <= {EXACT_DIM_CAP}")
    if isinstance(model, models.Choquet):
        return model
    theta, stderr = models.theta_table(model, mc_n=mc_n, seed=seed)
    max_se = float(np.max(stderr)) if stderr is not None else 0.0
    tol = max(1e-9, 3.0 * max_se)
    provenance = {"source": model.family, "theta_max_stderr": max_se}
    if max_se > 0:
        provenance.update({"mc_n": mc_n, "seed": seed})
    return validate_choquet(theta, tol=tol, provenance=provenance)


def random_choquet_tau(d: int, rng: np.random.Generator, density: float = 0.6) -> CoefficientTable:
    """Random valid tau table.

    Random nonnegative masses on a random selection of sets are scaled so the
    largest marginal sum is one; singletons absorb the remaining deficit.
    """
    w = rng.exponential(size=1 << d) * (rng.random(1 << d) < density)
    w[0] = 0.0
    for i in range(d):
        w[1 << i] = 0.0
    top = zeta_supersets(w, d)[[1 << i for i in range(d)]].max()
    if top > 0:
        # a random factor in [1, 2) leaves some room for singleton mass
        w /= top * (1.0 + rng.random())
    marg = zeta_supersets(w, d)[[1 << i for i in range(d)]]
    for i in range(d):
        w[1 << i] = 1.0 - marg[i]
    return CoefficientTable(d, "tau", w)

"""Lower orthant, upper orthant and concordance orders between models.

Choquet-type pairs (Choquet, independent, fully dependent) are decided
exactly from their coefficient tables.  Every other pair is compared on a
grid of directions: the lower orthant order through ell, the upper orthant
order through the directional tail dependence E min_{i in A}(a_i Z_i) for
every subset A with at least two elements.  A grid verdict certifies the
order only at the grid's resolution, and the verdict says so.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from . import coeffs
from . import models as M
from .core import (
    DimensionError,
    MaxStabError,
    SimplexGrid,
    mask_to_indices,
    popcount,
    popcounts,
    simplex_grid,
)
from .coeffs import CoefficientTable, inclusion_exclusion

EXACT_TOL = 1e-9
MC_SIGMAS = 3.0
MAX_WITNESSES = 16

OUTCOMES = ("holds", "holds_reversed", "incomparable", "inconclusive")


@dataclass(frozen=True)
class Witness:
    """One comparison point: ``lhs`` belongs to the first model."""

    point: tuple[float, ...]
    subset: tuple[int, ...] | None
    lhs: float
    rhs: float
    tolerance: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "subset": None if self.subset is None else list(self.subset),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class OrderVerdict:
    """Outcome of comparing two models.

    ``against`` holds witnesses where the first model is significantly
    larger (evidence against m1 <= m2); ``against_reversed`` holds those where
    it is significantly smaller.
    """

    relation: str
    outcome: str
    against: tuple[Witness, ...] = ()
    against_reversed: tuple[Witness, ...] = ()
    grid: dict = field(default_factory=dict)
    exactness: str = "exact"
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.outcome == "holds"

    @property
    def witnesses(self) -> tuple[Witness, ...]:
        return self.against + self.against_reversed

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "outcome": self.outcome,
            "exactness": self.exactness,
            "grid": self.grid,
            "witnesses": {
                "against": [w.to_dict() for w in self.against],
                "against_reversed": [w.to_dict() for w in self.against_reversed],
            },
            "details": self.details,
        }


def _outcome(n_against: int, n_rev: int, monte_carlo: bool) -> str:
    if n_against and n_rev:
        return "incomparable"
    if n_against:
        return "holds_reversed"
    if monte_carlo and not n_rev:
        return "inconclusive"
    return "holds"


def _pick(witnesses: list[tuple[float, int, Witness]]) -> tuple[Witness, ...]:
    # worst excess first, grid order breaks ties
    witnesses.sort(key=lambda t: (-t[0], t[1]))
    return tuple(w for _, _, w in witnesses[:MAX_WITNESSES])


def _verdict(relation, lhs, rhs, tol, points, subsets, grid, exactness, details=None):
    against, rev = [], []
    for k in range(len(lhs)):
        diff = lhs[k] - rhs[k]
        if abs(diff) <= tol[k]:
            continue
        w = Witness(
            tuple(float(v) for v in points[k]),
            None if subsets is None else mask_to_indices(int(subsets[k])),
            float(lhs[k]),
            float(rhs[k]),
            float(tol[k]),
        )
        (against if diff > 0 else rev).append((abs(diff) - tol[k], k, w))
    det = {
        "points": int(len(lhs)),
        "significant_against": len(against),
        "significant_reversed": len(rev),
        "max_margin": float(np.max(lhs - rhs)) if len(lhs) else 0.0,
        "min_margin": float(np.min(lhs - rhs)) if len(lhs) else 0.0,
    }
    det.update(details or {})
    return OrderVerdict(
        relation,
        _outcome(len(against), len(rev), exactness == "monte_carlo"),
        _pick(against),
        _pick(rev),
        grid,
        exactness,
        det,
    )


def _check_dims(m1, m2):
    if m1.dim != m2.dim:
        raise DimensionError(f"models have dimensions {m1.dim} and {m2.dim}")


def _indicator(bits: int, d: int) -> np.ndarray:
    return np.array([(bits >> i) & 1 for i in range(d)], dtype=float)


def _table_verdict(relation, t1: CoefficientTable, t2: CoefficientTable, min_size: int):
    d = t1.dim
    sizes = popcounts(d)
    masks = np.array([b for b in range(1, 1 << d) if sizes[b] >= min_size], dtype=int)
    pts = np.array([_indicator(b, d) for b in masks]).reshape(-1, d)
    lhs = t1.values[masks]
    rhs = t2.values[masks]
    tol = np.full(len(masks), EXACT_TOL)
    grid = {"type": "subsets", "dim": d, "count": int(len(masks)), "table": t1.kind}
    return _verdict(relation, lhs, rhs, tol, pts, masks, grid, "exact")


def _grid(d: int, grid) -> SimplexGrid:
    if grid is None:
        return simplex_grid(d)
    if isinstance(grid, int):
        return simplex_grid(d, grid)
    return grid


def _directions(g: SimplexGrid) -> np.ndarray:
    return g.interior_directions()


def _mc_models(m1, m2):
    return [m for m in (m1, m2) if not m.exact]


def _exact_values(model, pts, kind, masks, mc_n, seed):
    """Values and absolute errors of ell (kind='max') or directional chi."""
    if kind == "max":
        v, e, _ = M.ell_batch(model, pts, mc_n, seed)
        return v, e
    d = model.dim
    # ell at every a * e_I, then inclusion-exclusion per direction
    subs = np.arange(1, 1 << d)
    ind = np.array([_indicator(b, d) for b in subs])
    uniq = np.unique(pts, axis=0, return_inverse=True)
    dirs, inv = uniq[0], np.asarray(uniq[1]).ravel()
    big = (dirs[:, None, :] * ind[None, :, :]).reshape(-1, d)
    v, e, _ = M.ell_batch(model, big, mc_n, seed)
    v = v.reshape(len(dirs), -1)
    e = e.reshape(len(dirs), -1)
    chi = np.empty(len(pts))
    err = np.empty(len(pts))
    for k in range(len(pts)):
        table = np.concatenate([[0.0], v[inv[k]]])
        chi[k] = inclusion_exclusion(table, d)[masks[k]]
        err[k] = e[inv[k]].sum()
    return chi, err


def _compare(relation, m1, m2, pts, kind, masks, grid_desc, mc_n, seed):
    mc = _mc_models(m1, m2)
    if not mc:
        v1, e1 = _exact_values(m1, pts, kind, masks, mc_n, seed)
        v2, e2 = _exact_values(m2, pts, kind, masks, mc_n, seed)
        tol = EXACT_TOL + e1 + e2
        exactness = "grid_certificate"
        extra = {}
    else:
        from . import montecarlo

        if mc_n is None or mc_n < 2:
            raise MaxStabError("Monte Carlo comparison needs mc_n >= 2")
        if len(mc) == 2:
            st = montecarlo.functional_stats([m1, m2], pts, kind, masks, mc_n, seed)
            v1, v2 = st["mean"]
            tol = MC_SIGMAS * st["diff_se"]
        else:
            st = montecarlo.functional_stats(mc, pts, kind, masks, mc_n, seed)
            other = m2 if mc[0] is m1 else m1
            vo, eo = _exact_values(other, pts, kind, masks, mc_n, seed)
            vm = st["mean"][0]
            v1, v2 = (vm, vo) if mc[0] is m1 else (vo, vm)
            tol = MC_SIGMAS * st["se"][0] + EXACT_TOL + eo
        exactness = "monte_carlo"
        extra = {"mc_n": mc_n, "seed": seed, "sigmas": MC_SIGMAS}
    return _verdict(relation, v1, v2, tol, pts, masks, grid_desc, exactness, extra)


def check_lo(m1, m2, grid=None, mc_n: int = M.DEFAULT_MC_N, seed: int = 0) -> OrderVerdict:
    """Is m1 smaller than m2 in the lower orthant order (ell_1 <= ell_2)?"""
    _check_dims(m1, m2)
    c1, c2 = M.as_choquet(m1), M.as_choquet(m2)
    if c1 is not None and c2 is not None:
        return _table_verdict("lo", c1.theta, c2.theta, 2)
    g = _grid(m1.dim, grid)
    pts = _directions(g)
    keep = np.count_nonzero(pts > 0, axis=1) >= 2
    desc = dict(g.descriptor(), clipped=1.0 / (4 * g.m))
    return _compare("lo", m1, m2, pts[keep], "max", None, desc, mc_n, seed)


def check_uo(m1, m2, grid=None, mc_n: int = M.DEFAULT_MC_N, seed: int = 0) -> OrderVerdict:
    """Is m1 smaller than m2 in the upper orthant order?

    Compares E min_{i in A}(a_i Z_i) over grid directions a and all A with
    |A| >= 2 (singletons agree for every pair of models).
    """
    _check_dims(m1, m2)
    d = m1.dim
    c1, c2 = M.as_choquet(m1), M.as_choquet(m2)
    if c1 is not None and c2 is not None:
        # directional chi of a Choquet model is min(a_A) chi(A)
        return _table_verdict("uo", c1.chi, c2.chi, 2)
    g = _grid(d, grid)
    dirs = _directions(g)
    subsets = [b for b in range(1, 1 << d) if popcount(b) >= 2]
    pts = np.repeat(dirs, len(subsets), axis=0)
    masks = np.tile(np.array(subsets, dtype=int), len(dirs))
    desc = dict(g.descriptor(), clipped=1.0 / (4 * g.m), subsets=len(subsets))
    return _compare("uo", m1, m2, pts, "min", masks, desc, mc_n, seed)


def _combine(uo: OrderVerdict, lo: OrderVerdict) -> str:
    outs = {uo.outcome, lo.outcome}
    if "incomparable" in outs or outs == {"holds", "holds_reversed"}:
        return "incomparable"
    if outs == {"holds"}:
        return "holds"
    if outs == {"holds_reversed"}:
        return "holds_reversed"
    return "inconclusive"


def check_pqd(m1, m2, grid=None, mc_n: int = M.DEFAULT_MC_N, seed: int = 0) -> OrderVerdict:
    """m1 <= m2 in the concordance order: m1 <=_uo m2 and m2 <=_lo m1."""
    uo = check_uo(m1, m2, grid, mc_n, seed)
    lo = check_lo(m2, m1, grid, mc_n, seed)
    details = {"uo": uo.outcome, "lo_reversed": lo.outcome}
    if m1.dim == 2:
        # in two dimensions directional chi(12) = a1 + a2 - ell(a), so the
        # upper orthant order alone decides and both routes must agree
        details["route_consistent"] = uo.outcome == lo.outcome
    exactness = "monte_carlo" if "monte_carlo" in (uo.exactness, lo.exactness) else (
        "exact" if uo.exactness == lo.exactness == "exact" else "grid_certificate"
    )
    return OrderVerdict(
        "pqd",
        _combine(uo, lo),
        uo.against + lo.against_reversed,
        uo.against_reversed + lo.against,
        {"uo": uo.grid, "lo": lo.grid},
        exactness,
        details,
    )


def check(relation: str, m1, m2, grid=None, mc_n: int = M.DEFAULT_MC_N, seed: int = 0) -> OrderVerdict:
    fn = {"lo": check_lo, "uo": check_uo, "pqd": check_pqd}.get(relation)
    if fn is None:
        raise MaxStabError(f"unknown relation {relation!r}")
    return fn(m1, m2, grid, mc_n, seed)


EXIT_CODES = {"holds": 0, "holds_reversed": 1, "incomparable": 1, "inconclusive": 4}


# ---------------------------------------------------------------- Bernstein property

BERNSTEIN = {
    "one_minus_exp": lambda x: -np.expm1(-x),
    "identity": lambda x: x,
    "log1p": np.log1p,
    "sqrt_shift": lambda x: np.sqrt(1.0 + x) - 1.0,
}


def prop_b7_oracle(theta1: CoefficientTable, theta2: CoefficientTable, bernstein="one_minus_exp"):
    """Check that chi_1 <= chi_2 carries over to the Bernstein-transformed tables.

    For every nonempty A the signed sum over I in A of g(theta_1(I)) must not
    exceed the same sum for theta_2.  Returns (ok, worst margin), where the
    margin is lhs - rhs maximised over A.
    """
    if theta1.kind != "theta" or theta2.kind != "theta":
        raise MaxStabError("prop_b7_oracle expects theta tables")
    if theta1.dim != theta2.dim:
        raise DimensionError("tables differ in dimension")
    d = theta1.dim
    chi1 = inclusion_exclusion(theta1.values, d)
    chi2 = inclusion_exclusion(theta2.values, d)
    if np.any(chi1[1:] > chi2[1:] + 1e-12):
        b = int(np.argmax(chi1 - chi2))
        raise MaxStabError(f"precondition fails: chi_1 > chi_2 at {list(mask_to_indices(b))}")
    g = BERNSTEIN[bernstein] if isinstance(bernstein, str) else bernstein
    lhs = inclusion_exclusion(g(theta1.values), d)
    rhs = inclusion_exclusion(g(theta2.values), d)
    margin = float(np.max(lhs[1:] - rhs[1:]))
    return margin <= 1e-10, margin


def chi_ordered_pair(d: int, rng: np.random.Generator, moves: int = 3):
    """Random valid tau tables (smaller, larger) with chi_smaller <= chi_larger.

    Mass on a set K of the larger table is moved onto the blocks of a random
    partition of K.  Margins are preserved and chi drops exactly on the
    subsets of K that no single block contains.
    """
    big = coeffs.random_choquet_tau(d, rng)
    small = big.values.copy()
    for _ in range(moves):
        cands = [b for b in range(1, 1 << d) if popcount(b) >= 2 and small[b] > 0]
        if not cands:
            break
        K = int(rng.choice(cands))
        members = mask_to_indices(K)
        labels = rng.integers(0, len(members), size=len(members))
        if len(set(labels.tolist())) == 1:
            labels[0] = (labels[0] + 1) % len(members)
        c = small[K] * rng.random()
        small[K] -= c
        for lab in set(labels.tolist()):
            block = 0
            for i, l in zip(members, labels):
                if l == lab:
                    block |= 1 << (i - 1)
            small[block] += c
    return CoefficientTable(d, "tau", small), big

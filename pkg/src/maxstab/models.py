"""Simple max-stable model families and their dependence functionals.

Every model is an immutable value carrying its dimension.  The stable tail
dependence function ``ell`` is evaluated exactly where a closed form exists,
by adaptive quadrature for the bivariate Dirichlet model, and by Monte Carlo
over the family's generator otherwise.  The accuracy of every value travels
with it in an :class:`EllValue`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import norm

from .core import (
    DimensionError,
    MaxStabError,
    VariogramMatrix,
    as_bits,
    mask_to_indices,
    popcount,
    subset_bits,
    validate_alpha,
    validate_variogram,
)
from . import coeffs
from .coeffs import CoefficientTable

QUAD_TOL = 1e-10
DEFAULT_MC_N = 100_000


class ModelSpec:
    """Common base of the five model families."""

    family: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def key(self) -> tuple:
        """Hashable identity used for caching generator samples."""
        raise NotImplementedError

    @property
    def exact(self) -> bool:
        """True if ell is available in closed form at this dimension."""
        return True


@dataclass(frozen=True)
class Independent(ModelSpec):
    d: int
    family = "independent"

    def __post_init__(self):
        _check_dim(self.d)

    @property
    def dim(self):
        return self.d

    def key(self):
        return (self.family, self.d)


@dataclass(frozen=True)
class FullyDependent(ModelSpec):
    d: int
    family = "dependent"

    def __post_init__(self):
        _check_dim(self.d)

    @property
    def dim(self):
        return self.d

    def key(self):
        return (self.family, self.d)


@dataclass(frozen=True)
class Dirichlet(ModelSpec):
    """Max-stable Dirichlet model with shape vector ``alpha``."""

    alpha: tuple[float, ...]
    family = "dirichlet"

    def __post_init__(self):
        object.__setattr__(self, "alpha", validate_alpha(self.alpha))
        _check_dim(len(self.alpha))

    @property
    def dim(self):
        return len(self.alpha)

    @property
    def exact(self):
        return self.dim <= 2

    def key(self):
        return (self.family, self.alpha)


@dataclass(frozen=True)
class HuslerReiss(ModelSpec):
    """Huesler-Reiss model parametrised by a variogram matrix."""

    gamma: VariogramMatrix
    family = "husler_reiss"

    def __post_init__(self):
        if not isinstance(self.gamma, VariogramMatrix):
            object.__setattr__(self, "gamma", validate_variogram(self.gamma))
        _check_dim(self.gamma.dim)

    @classmethod
    def bivariate(cls, gamma12: float) -> "HuslerReiss":
        return cls(validate_variogram([[0.0, gamma12], [gamma12, 0.0]]))

    @property
    def dim(self):
        return self.gamma.dim

    @property
    def exact(self):
        return self.dim <= 2

    def key(self):
        return (self.family, self.gamma.gamma)


@dataclass(frozen=True, eq=False)
class Choquet(ModelSpec):
    """Choquet (Tawn-Molchanov) model stored through its spectral masses."""

    tau: CoefficientTable
    tol: float = 1e-9
    provenance: dict = field(default_factory=dict, compare=False)
    family = "choquet"

    def __post_init__(self):
        coeffs.check_choquet_table(self.tau, self.tol)
        if self.tau.kind != "tau":
            object.__setattr__(self, "tau", coeffs.convert(self.tau, "tau"))

    @classmethod
    def from_table(cls, table: CoefficientTable, tol: float = 1e-9) -> "Choquet":
        return coeffs.validate_choquet(table, tol)

    @property
    def dim(self):
        return self.tau.dim

    @property
    def theta(self) -> CoefficientTable:
        return coeffs.tau_to_theta(self.tau)

    @property
    def chi(self) -> CoefficientTable:
        return coeffs.tau_to_chi(self.tau)

    def key(self):
        return (self.family, self.dim, tuple(self.tau.values.tolist()))

    def __eq__(self, other):
        return isinstance(other, Choquet) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _check_dim(d: int):
    if not 1 <= d <= 20:
        raise DimensionError(f"model dimension {d} outside 1..20")


def as_choquet(model: ModelSpec) -> Choquet | None:
    """Exact Choquet form of the independent, fully dependent and Choquet families."""
    if isinstance(model, Choquet):
        return model
    if model.dim > coeffs.EXACT_DIM_CAP:
        return None
    if isinstance(model, Independent):
        tau = np.zeros(1 << model.d)
        for i in range(model.d):
            tau[1 << i] = 1.0
        return Choquet(CoefficientTable(model.d, "tau", tau))
    if isinstance(model, FullyDependent):
        tau = np.zeros(1 << model.d)
        tau[-1] = 1.0
        return Choquet(CoefficientTable(model.d, "tau", tau))
    return None


@dataclass(frozen=True)
class EllValue:
    """A functional value with its accuracy.

    ``kind`` is ``exact``, ``quadrature`` (``error`` is an absolute
    tolerance) or ``monte_carlo`` (``error`` is a standard error from ``n``
    samples).
    """

    value: float
    kind: str = "exact"
    error: float = 0.0
    n: int | None = None

    def __float__(self):
        return self.value

    @property
    def tolerance(self) -> float:
        """Comparison slack: the tolerance, or three standard errors."""
        if self.kind == "monte_carlo":
            return 3.0 * self.error
        return max(self.error, 1e-9)


# ---------------------------------------------------------------- closed forms

def hr_ell_bivariate(x1, x2, gamma12: float):
    """Bivariate Huesler-Reiss stable tail dependence function."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    eta = math.sqrt(gamma12)
    if eta == 0.0:
        return np.maximum(x1, x2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(x1 / x2) / eta
        val = x1 * norm.cdf(eta / 2 + r) + x2 * norm.cdf(eta / 2 - r)
    val = np.where(x2 == 0, x1, val)
    val = np.where(x1 == 0, x2, val)
    return val


def hr_partial(t, gamma12: float):
    """d ell / d x1 at (x1, x2) with t = x1 / x2 for the bivariate HR model."""
    eta = math.sqrt(gamma12)
    t = np.asarray(t, dtype=float)
    lt = np.log(t)
    return (
        norm.cdf(eta / 2 + lt / eta)
        + norm.pdf(eta / 2 + lt / eta) / eta
        - norm.pdf(eta / 2 - lt / eta) / (eta * t)
    )


class DirichletBivariate:
    """Cumulative angular integrals of the bivariate Dirichlet model.

    H(t) integrates the angular density h over [0, t] and Ht(t) integrates
    w h(w).  Endpoint singularities of h (shape below one) are removed with
    the power substitutions w = u**(1/p1) on [0, 1/2] and 1 - w = v**(1/p2)
    on [1/2, 1], where p_i = min(alpha_i, 1).  With p_i = alpha_i the factor
    w**(alpha_i - 1) dw collapses to du / alpha_i.
    """

    def __init__(self, a1: float, a2: float, tol: float = QUAD_TOL):
        self.a1, self.a2, self.tol = float(a1), float(a2), tol
        self.p1, self.p2 = min(self.a1, 1.0), min(self.a2, 1.0)
        self.log_c = (
            gammaln(a1 + a2 + 1)
            + a1 * math.log(a1)
            + a2 * math.log(a2)
            - gammaln(a1)
            - gammaln(a2)
        )

    def density(self, w):
        a1, a2 = self.a1, self.a2
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp(
                self.log_c
                + (a1 - 1) * np.log(w)
                + (a2 - 1) * np.log1p(-w)
                - (a1 + a2 + 1) * np.log(a1 * w + a2 * (1 - w))
            )

    def _left(self, u, moment):
        a1, a2, p1 = self.a1, self.a2, self.p1
        if u <= 0.0:
            if a1 > p1 or moment:
                return 0.0
            return math.exp(self.log_c - (a1 + a2 + 1) * math.log(a2)) / p1
        w = u ** (1.0 / p1)
        val = math.exp(
            self.log_c
            + (a1 / p1 - 1.0) * math.log(u)
            + (a2 - 1) * math.log1p(-w)
            - (a1 + a2 + 1) * math.log(a1 * w + a2 * (1 - w))
        ) / p1
        return val * w if moment else val

    def _right(self, v, moment):
        a1, a2, p2 = self.a1, self.a2, self.p2
        if v <= 0.0:
            if a2 > p2:
                return 0.0
            return math.exp(self.log_c - (a1 + a2 + 1) * math.log(a1)) / p2
        s = v ** (1.0 / p2)
        w = 1.0 - s
        val = math.exp(
            self.log_c
            + (a1 - 1) * math.log(w)
            + (a2 / p2 - 1.0) * math.log(v)
            - (a1 + a2 + 1) * math.log(a1 * w + a2 * s)
        ) / p2
        return val * w if moment else val

    def _quad(self, f, lo, hi, moment):
        if hi <= lo:
            return 0.0, 0.0
        with warnings.catch_warnings():
            # the returned error estimate is propagated instead
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                f, lo, hi, args=(moment,), epsabs=self.tol / 8, epsrel=1e-13, limit=200
            )
        return val, err

    def integrals_many(self, ts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """H, Ht and error bounds at every t in ``ts``.

        Pieces between consecutive sorted abscissae are integrated separately
        and accumulated, so a whole curve costs about one quadrature per point.
        """
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, 1.0)
        uniq, inv = np.unique(ts, return_inverse=True)
        H = np.zeros(uniq.size)
        Ht = np.zeros(uniq.size)
        E = np.zeros(uniq.size)
        acc = np.zeros(3)
        prev = 0.0
        for k, t in enumerate(uniq):
            if t <= 0.5:
                acc += self._piece_left(prev, t)
                prev = t
            else:
                if prev < 0.5:
                    acc += self._piece_left(prev, 0.5)
                    prev = 0.5
                acc += self._piece_right(prev, t)
                prev = t
            H[k], Ht[k], E[k] = acc
        return H[inv], Ht[inv], E[inv]

    def _piece_left(self, t0, t1):
        lo, hi = t0 ** self.p1, t1 ** self.p1
        h, e = self._quad(self._left, lo, hi, False)
        m, f = self._quad(self._left, lo, hi, True)
        return np.array([h, m, e + f])

    def _piece_right(self, t0, t1):
        # v = (1 - w)**p2 decreases in w
        lo, hi = (1.0 - t1) ** self.p2, (1.0 - t0) ** self.p2
        h, e = self._quad(self._right, lo, hi, False)
        m, f = self._quad(self._right, lo, hi, True)
        return np.array([h, m, e + f])

    def integrals(self, t: float) -> tuple[float, float, float]:
        """(H(t), Ht(t), error bound)."""
        H, Ht, E = self.integrals_many([t])
        return float(H[0]), float(Ht[0]), float(E[0])

    def ell_many(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        """ell(x1, x2) = x1 - (x1 + x2) Ht(t) + x2 H(t), t = x2 / (x1 + x2)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        s = x1 + x2
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(s > 0, x2 / s, 0.0)
        H, Ht, E = self.integrals_many(t)
        val = x1 - s * Ht + x2 * H
        err = E * (s + x2) + 1e-15 * s
        edge = (x1 == 0) | (x2 == 0)
        val = np.where(edge, np.maximum(x1, x2), val)
        err = np.where(edge, 0.0, err)
        return val, err

    def ell(self, x1: float, x2: float) -> tuple[float, float]:
        v, e = self.ell_many([x1], [x2])
        return float(v[0]), float(e[0])

    def partials_many(self, x1, x2):
        """(1 - Ht(t), H(t) - Ht(t)) with t = x2 / (x1 + x2)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        H, Ht, _ = self.integrals_many(x2 / (x1 + x2))
        return 1.0 - Ht, H - Ht

    def partials(self, x1: float, x2: float) -> tuple[float, float]:
        a, b = self.partials_many([x1], [x2])
        return float(a[0]), float(b[0])


@lru_cache(maxsize=64)
def dirichlet_bivariate(a1: float, a2: float) -> DirichletBivariate:
    return DirichletBivariate(a1, a2)


# ---------------------------------------------------------------- evaluation

def _check_point(model: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.dim:
        raise DimensionError(f"point of length {x.size} for a {model.dim}-variate model")
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise MaxStabError("ell is defined for finite nonnegative arguments")
    return x


def ell_batch(model: ModelSpec, points, mc_n: int = DEFAULT_MC_N, seed: int = 0):
    """Evaluate ell at the rows of ``points``.

    Returns ``(values, errors, kind)``.  Monte Carlo families use one
    generator sample (common random numbers) for every row.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != model.dim:
        raise DimensionError(f"points have {pts.shape[1]} columns for a {model.dim}-variate model")
    if np.any(pts < 0) or not np.all(np.isfinite(pts)):
        raise MaxStabError("ell is defined for finite nonnegative arguments")
    k = pts.shape[0]
    npos = np.count_nonzero(pts > 0, axis=1)
    values = np.zeros(k)
    errors = np.zeros(k)
    trivial = npos <= 1
    values[trivial] = pts[trivial].sum(axis=1)
    todo = ~trivial
    kind = "exact"
    if not todo.any():
        return values, errors, kind
    sub = pts[todo]
    ch = as_choquet(model)
    if isinstance(model, Independent):
        values[todo] = sub.sum(axis=1)
    elif isinstance(model, FullyDependent):
        values[todo] = sub.max(axis=1)
    elif ch is not None:
        values[todo] = coeffs.choquet_ell(ch.tau, sub)
    elif isinstance(model, HuslerReiss) and model.dim == 2:
        values[todo] = hr_ell_bivariate(sub[:, 0], sub[:, 1], model.gamma.gamma[0][1])
    elif isinstance(model, Dirichlet) and model.dim == 2:
        q = dirichlet_bivariate(*model.alpha)
        values[todo], errors[todo] = q.ell_many(sub[:, 0], sub[:, 1])
        kind = "quadrature"
    else:
        from . import montecarlo

        if mc_n is None or mc_n <= 0:
            raise MaxStabError("Monte Carlo evaluation needs a positive sample size")
        stats = montecarlo.functional_stats([model], sub, "max", None, mc_n, seed)
        values[todo] = stats["mean"][0]
        errors[todo] = stats["se"][0]
        kind = "monte_carlo"
    return values, errors, kind


def ell(model: ModelSpec, x, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> EllValue:
    """Stable tail dependence function at a single point."""
    x = _check_point(model, x)
    values, errors, kind = ell_batch(model, x[None, :], mc_n, seed)
    n = mc_n if kind == "monte_carlo" else None
    return EllValue(float(values[0]), kind, float(errors[0]), n)


def exponent(model: ModelSpec, x, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> float:
    """Exponent function V(x) = ell(1/x); infinite entries contribute zero."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.dim:
        raise DimensionError(f"point of length {x.size} for a {model.dim}-variate model")
    if np.any(np.isnan(x)) or np.any(x <= 0):
        raise MaxStabError("exponent function needs strictly positive arguments")
    with np.errstate(divide="ignore"):
        recip = np.where(np.isinf(x), 0.0, 1.0 / x)
    return ell(model, recip, mc_n, seed).value


def cdf(model: ModelSpec, x, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> float:
    """Distribution function G(x) = exp(-V(x)) on unit Frechet margins."""
    return math.exp(-exponent(model, x, mc_n, seed))


def _mask_vector(bits: int, d: int) -> np.ndarray:
    return np.array([(bits >> i) & 1 for i in range(d)], dtype=float)


def extremal_coefficient(model: ModelSpec, A, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> EllValue:
    bits = as_bits(A, model.dim)
    if bits == 0:
        raise MaxStabError("extremal coefficient of the empty set is undefined")
    return ell(model, _mask_vector(bits, model.dim), mc_n, seed)


def directional_chi(model: ModelSpec, a, A, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> EllValue:
    """E min_{i in A}(a_i Z_i) as the signed sum of ell(a e_I) over I in A.

    For Monte Carlo families the per-sample min-max identity makes the signed
    sum equal to the sample mean of the minimum, which is what is returned.
    """
    d = model.dim
    a = np.asarray(a, dtype=float)
    if a.shape != (d,) or np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise MaxStabError("direction must have d finite positive components")
    bits = as_bits(A, d)
    if bits == 0:
        raise MaxStabError("directional tail dependence of the empty set is undefined")
    if popcount(bits) == 1:
        return EllValue(float(a[bits.bit_length() - 1]))
    if not model.exact:
        from . import montecarlo

        stats = montecarlo.functional_stats([model], a[None, :], "min", np.array([bits]), mc_n, seed)
        return EllValue(float(stats["mean"][0][0]), "monte_carlo", float(stats["se"][0][0]), mc_n)
    subs = [s for s in subset_bits(bits) if s]
    pts = np.array([a * _mask_vector(s, d) for s in subs])
    values, errors, kind = ell_batch(model, pts, mc_n, seed)
    signs = np.array([1.0 if popcount(s) % 2 else -1.0 for s in subs])
    return EllValue(float(signs @ values), kind, float(np.sum(errors)))


def tail_dependence_coefficient(model: ModelSpec, A, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> EllValue:
    """chi(A), the inclusion-exclusion transform of the extremal coefficients."""
    return directional_chi(model, np.ones(model.dim), A, mc_n, seed)


def pickands(model: ModelSpec, w, mc_n: int = DEFAULT_MC_N, seed: int = 0) -> EllValue:
    w = np.asarray(w, dtype=float)
    if np.any(w < -1e-9) or abs(w.sum() - 1.0) > 1e-9:
        raise MaxStabError("Pickands function is evaluated on the unit simplex")
    return ell(model, np.clip(w, 0.0, None), mc_n, seed)


def theta_table(model: ModelSpec, mc_n: int = DEFAULT_MC_N, seed: int = 0):
    """All extremal coefficients as a theta table plus per-entry standard errors.

    Monte Carlo tables normalise every generator column by its sample mean,
    which keeps the estimated table exactly union-completely alternating
    with unit singletons.  ``stderr`` is None for exact tables.
    """
    d = model.dim
    if d > coeffs.EXACT_DIM_CAP:
        raise DimensionError(f"theta tables need d <= {coeffs.EXACT_DIM_CAP}")
    ch = as_choquet(model)
    if ch is not None:
        return ch.theta, None
    masks = np.arange(1, 1 << d)
    if model.exact:
        pts = np.array([_mask_vector(b, d) for b in masks])
        values, errors, _ = ell_batch(model, pts, mc_n, seed)
        table = np.concatenate([[0.0], values])
        for i in range(d):
            table[1 << i] = 1.0
        return CoefficientTable(d, "theta", table), np.concatenate([[0.0], errors])
    from . import montecarlo

    Z = montecarlo.sample_generator(model, mc_n, seed)
    Z = Z / Z.mean(axis=0)
    pts = np.array([_mask_vector(b, d) for b in masks])
    stats = montecarlo.moments_from_sample(Z, pts, "max", None)
    table = np.concatenate([[0.0], stats[0]])
    for i in range(d):
        table[1 << i] = 1.0
    return CoefficientTable(d, "theta", table), np.concatenate([[0.0], stats[1]])


def marginalize(model: ModelSpec, A) -> ModelSpec:
    """Law of the subvector X_A."""
    d = model.dim
    bits = as_bits(A, d)
    if bits == 0:
        raise MaxStabError("cannot marginalise to the empty set")
    idx = [i - 1 for i in mask_to_indices(bits)]
    k = len(idx)
    if isinstance(model, Independent):
        return Independent(k)
    if isinstance(model, FullyDependent):
        return FullyDependent(k)
    if isinstance(model, Dirichlet):
        return Dirichlet(tuple(model.alpha[i] for i in idx))
    if isinstance(model, HuslerReiss):
        g = model.gamma.array()[np.ix_(idx, idx)]
        return HuslerReiss(validate_variogram(g))
    if isinstance(model, Choquet):
        theta = model.theta
        new = np.zeros(1 << k)
        for b in range(1, 1 << k):
            orig = 0
            for j in range(k):
                if b >> j & 1:
                    orig |= 1 << idx[j]
            new[b] = theta.values[orig]
        return Choquet(CoefficientTable(k, "theta", new), tol=model.tol)
    raise MaxStabError(f"cannot marginalise model of type {type(model).__name__}")


def dirichlet_angular_density(alpha, w) -> float:
    """Angular density of the max-stable Dirichlet model at an interior simplex point."""
    a = np.asarray(validate_alpha(alpha))
    w = np.asarray(w, dtype=float)
    if w.shape != a.shape:
        raise DimensionError("simplex point and alpha differ in length")
    if abs(w.sum() - 1.0) > 1e-9 or np.any(w <= 0):
        raise MaxStabError("angular density is evaluated at interior simplex points only")
    s = float(a @ w)
    log_h = (
        gammaln(a.sum() + 1)
        - math.log(s)
        + np.sum(a * np.log(a) + (a - 1) * np.log(w) - gammaln(a) - a * math.log(s))
    )
    return float(math.exp(log_h))


# ---------------------------------------------------------------- JSON schema

def model_from_json(spec: dict) -> ModelSpec:
    """Build a model from the JSON model-spec schema."""
    if not isinstance(spec, dict):
        raise MaxStabError("model spec must be a JSON object")
    family = spec.get("family")
    d = spec.get("d")
    if family in ("independent", "dependent"):
        if not isinstance(d, int):
            raise MaxStabError("field 'd' must be an integer")
        return Independent(d) if family == "independent" else FullyDependent(d)
    if family == "dirichlet":
        if "alpha" not in spec:
            raise MaxStabError("dirichlet model needs field 'alpha'")
        model = Dirichlet(tuple(spec["alpha"]))
    elif family == "husler_reiss":
        if "gamma" not in spec:
            raise MaxStabError("husler_reiss model needs field 'gamma'")
        model = HuslerReiss(validate_variogram(spec["gamma"], spec.get("tol_cnd", 1e-9)))
    elif family == "choquet":
        kinds = [k for k in coeffs.KINDS if k in spec]
        if len(kinds) != 1:
            raise MaxStabError("choquet model needs exactly one of 'tau', 'theta', 'chi'")
        if not isinstance(d, int):
            raise MaxStabError("field 'd' must be an integer")
        table = CoefficientTable.from_dict(spec[kinds[0]], d, kinds[0])
        model = coeffs.validate_choquet(table, spec.get("tol", 1e-9))
    else:
        raise MaxStabError(f"unknown family {family!r}")
    if d is not None and d != model.dim:
        raise DimensionError(f"field 'd' = {d} but parameters have dimension {model.dim}")
    return model


def model_to_json(model: ModelSpec, kind: str = "tau") -> dict:
    out: dict = {"family": model.family, "d": model.dim}
    if isinstance(model, Dirichlet):
        out["alpha"] = list(model.alpha)
    elif isinstance(model, HuslerReiss):
        out["gamma"] = [list(r) for r in model.gamma.gamma]
    elif isinstance(model, Choquet):
        out[kind] = coeffs.convert(model.tau, kind).to_dict()
    return out

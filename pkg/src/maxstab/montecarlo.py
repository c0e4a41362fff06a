"""Seeded generator sampling and Monte Carlo estimators.

Random numbers come from counter-based Philox streams.  A stream is keyed by
the root seed, a purpose tag and a chunk index, so the numbers behind row
``r`` of a sample never depend on how many threads produced it.  Samples are
assembled chunk by chunk in a fixed order and every reduction runs in that
order as well.

Gamma variables are drawn by inverting the regularised incomplete gamma
function.  All generator families that share a seed therefore share their
uniforms, which couples estimates for different parameters (common random
numbers) and keeps differences between models far less noisy than the
models themselves.
"""
from __future__ import annotations

from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os
import threading

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincinv

from .core import MaxStabError, VariogramMatrix, validate_alpha, validate_variogram
from .coeffs import CoefficientTable

CHUNK = 65_536

# purpose tags for stream derivation
_GAMMA, _NORMAL, _ATOM, _FRECHET, _TRIANGULAR, _GAMMA_ALT = 1, 2, 3, 4, 5, 6

CONVEX_CATALOG = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "abs_dev": lambda x: np.abs(x - 1.0),
    "max_c": lambda x: np.maximum(x, 1.0),
    "neg_min_c": lambda x: -np.minimum(x, 1.0),
}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MAXSTAB_THREADS", "1")))
    except ValueError:
        return 1


def stream(seed: int, tag: int, chunk: int = 0) -> np.random.Generator:
    """Independent Philox stream for (root seed, purpose, chunk)."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(tag, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _chunked(n: int, seed: int, tag: int, draw) -> np.ndarray:
    """Concatenate ``draw(rng, rows)`` over fixed-size chunks in order."""
    if n < 1:
        raise MaxStabError("sample size must be at least 1")
    sizes = [min(CHUNK, n - s) for s in range(0, n, CHUNK)]

    def job(k):
        return draw(stream(seed, tag, k), sizes[k])

    workers = thread_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]
    return np.concatenate(parts, axis=0)


def uniforms(n: int, d: int, seed: int, tag: int = _GAMMA) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    u = _chunked(n, seed, tag, lambda g, r: g.random((r, d)))
    return np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)


@dataclass(frozen=True)
class GeneratorSample:
    Z: np.ndarray
    family: str

    @property
    def n(self) -> int:
        return self.Z.shape[0]


def gamma_variates(alpha, n: int, seed: int) -> np.ndarray:
    """Unit-scale Gamma(alpha_i) columns by quantile transform."""
    a = np.asarray(validate_alpha(alpha))
    U = uniforms(n, a.size, seed, _GAMMA)
    return gammaincinv(a[None, :], U)


def sample_gamma_generator(alpha, n: int, seed: int = 0) -> GeneratorSample:
    a = np.asarray(validate_alpha(alpha))
    return GeneratorSample(gamma_variates(a, n, seed) / a, "dirichlet_gamma")


def sample_dirichlet_generator(alpha, n: int, seed: int = 0) -> GeneratorSample:
    """||alpha||_1 * D / alpha with D a normalised Gamma vector.

    Uses a different stream than the Gamma route so that the two routes
    give independent estimates of the same functional.
    """
    a = np.asarray(validate_alpha(alpha))
    G = gammaincinv(a[None, :], uniforms(n, a.size, seed, _GAMMA_ALT))
    D = G / G.sum(axis=1, keepdims=True)
    return GeneratorSample(a.sum() * D / a, "dirichlet_simplex")


def hr_anchor_covariance(gamma: VariogramMatrix, anchor: int) -> np.ndarray:
    """Covariance of W given W_anchor = 0: (g_ij + g_ik - g_jk) / 2."""
    g = gamma.array()
    i = anchor - 1
    return 0.5 * (g[:, [i]] + g[[i], :] - g)


def _psd_root(S: np.ndarray, clip: float = -1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    scale = max(1.0, float(np.abs(vals).max()))
    if vals.min() < clip * scale:
        raise MaxStabError(f"covariance not positive semidefinite (eigenvalue {vals.min():.3g})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def sample_hr_generator(gamma, n: int, seed: int = 0, anchor: int = 1) -> GeneratorSample:
    if not isinstance(gamma, VariogramMatrix):
        gamma = validate_variogram(gamma)
    d = gamma.dim
    if not 1 <= anchor <= d:
        raise MaxStabError(f"anchor {anchor} outside 1..{d}")
    S = hr_anchor_covariance(gamma, anchor)
    R = _psd_root(S)
    N = _chunked(n, seed, _NORMAL, lambda g, r: g.standard_normal((r, d)))
    W = N @ R
    return GeneratorSample(np.exp(W - 0.5 * np.diag(S)[None, :]), "husler_reiss")


def sample_choquet_generator(tau: CoefficientTable, n: int, seed: int = 0) -> GeneratorSample:
    """Z = theta_full * e_A with probability tau(A) / theta_full."""
    d = tau.dim
    w = np.clip(tau.values, 0.0, None)
    total = w.sum()
    cum = np.cumsum(w / total)
    cum[-1] = 1.0
    U = uniforms(n, 1, seed, _ATOM)[:, 0]
    atoms = np.searchsorted(cum, U, side="right")
    atoms = np.minimum(atoms, (1 << d) - 1)
    bits = (atoms[:, None] >> np.arange(d)[None, :]) & 1
    return GeneratorSample(total * bits.astype(float), "choquet")


def sample_generator(model, n: int, seed: int = 0, anchor: int = 1) -> np.ndarray:
    """Generator matrix for any model family; cached per (model, n, seed)."""
    key = (model.key(), int(n), int(seed), int(anchor))
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
    Z = _draw_generator(model, n, seed, anchor)
    Z.setflags(write=False)
    with _cache_lock:
        _cache[key] = Z
        while sum(v.nbytes for v in _cache.values()) > _CACHE_BYTES and len(_cache) > 1:
            _cache.popitem(last=False)
    return Z


_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()
_CACHE_BYTES = 600 * 2**20


def clear_cache():
    with _cache_lock:
        _cache.clear()


def _draw_generator(model, n, seed, anchor):
    from . import models as M

    if isinstance(model, M.Dirichlet):
        return sample_gamma_generator(model.alpha, n, seed).Z
    if isinstance(model, M.HuslerReiss):
        return sample_hr_generator(model.gamma, n, seed, anchor).Z
    if isinstance(model, M.Choquet):
        return sample_choquet_generator(model.tau, n, seed).Z
    if isinstance(model, M.Independent):
        # d * e_I with I uniform on {1..d}
        U = uniforms(n, 1, seed, _ATOM)[:, 0]
        idx = np.minimum((U * model.d).astype(int), model.d - 1)
        Z = np.zeros((n, model.d))
        Z[np.arange(n), idx] = model.d
        return Z
    if isinstance(model, M.FullyDependent):
        return np.ones((n, model.d))
    raise MaxStabError(f"no generator for model type {type(model).__name__}")


def sample_choquet_maxstable(tau: CoefficientTable, n: int, seed: int = 0) -> np.ndarray:
    """Exact draws of the Choquet max-stable vector.

    X_j = max over A containing j of tau(A) F_A with independent unit
    Frechet F_A = -1 / log U.
    """
    d = tau.dim
    atoms = [b for b in range(1, 1 << d) if tau.values[b] > 0]
    U = uniforms(n, len(atoms), seed, _FRECHET)
    F = -1.0 / np.log(U)
    X = np.zeros((n, d))
    for k, b in enumerate(atoms):
        col = tau.values[b] * F[:, k]
        for j in range(d):
            if b >> j & 1:
                np.maximum(X[:, j], col, out=X[:, j])
    return X


# ---------------------------------------------------------------- functionals

def _columns(Z: np.ndarray) -> list[np.ndarray]:
    return [np.ascontiguousarray(Z[:, j]) for j in range(Z.shape[1])]


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    n = v.size
    m = float(v.sum()) / n
    if n < 2:
        return m, math.inf
    var = max(float(v @ v) / n - m * m, 0.0) * n / (n - 1)
    return m, math.sqrt(var / n)


def _evaluate(cols_list, points, kind: str, masks):
    """Yield, point by point, the functional values for every sample in ``cols_list``.

    Products a_j Z_j are shared between consecutive points with the same
    direction, so looping over subsets of one direction is cheap.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    full = (1 << d) - 1
    last = None
    prods = None
    reduce = np.maximum if kind == "max" else np.minimum
    for p in range(pts.shape[0]):
        a = pts[p]
        if last is None or not np.array_equal(a, last):
            prods = [[c * a[j] for j, c in enumerate(cols)] for cols in cols_list]
            last = a
        mask = full if masks is None else int(masks[p])
        idx = [j for j in range(d) if mask >> j & 1 and (kind == "min" or a[j] > 0)]
        out = []
        for pr in prods:
            if not idx:
                out.append(np.zeros_like(pr[0]))
                continue
            v = pr[idx[0]]
            for j in idx[1:]:
                v = reduce(v, pr[j])
            out.append(v)
        yield out


def moments_from_sample(Z: np.ndarray, points, kind: str, masks=None):
    """Sample means and standard errors of max/min functionals at each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    means = np.empty(pts.shape[0])
    ses = np.empty(pts.shape[0])
    for p, (v,) in enumerate(_evaluate([_columns(Z)], pts, kind, masks)):
        means[p], ses[p] = _mean_se(v)
    return means, ses


def functional_stats(models, points, kind: str, masks, n: int, seed: int = 0) -> dict:
    """E max / E min functionals for one or two models on shared randomness.

    Returns means and standard errors per model (shape models x points) and,
    for two models, the standard error of the paired difference.
    """
    if kind not in ("max", "min"):
        raise MaxStabError(f"unknown functional {kind!r}")
    if n is None or n < 1:
        raise MaxStabError("Monte Carlo needs a positive sample size")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cols = [_columns(sample_generator(m, n, seed)) for m in models]
    k = pts.shape[0]
    mean = np.empty((len(models), k))
    se = np.empty((len(models), k))
    diff_se = np.empty(k) if len(models) == 2 else None
    for p, vals in enumerate(_evaluate(cols, pts, kind, masks)):
        for j, v in enumerate(vals):
            mean[j, p], se[j, p] = _mean_se(v)
        if diff_se is not None:
            diff_se[p] = _mean_se(vals[0] - vals[1])[1]
    return {"mean": mean, "se": se, "diff_se": diff_se, "n": n, "seed": seed}


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int
    seed: int
    estimand: str


def estimate_ell(model, x, n: int, seed: int = 0) -> McEstimate:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise MaxStabError("point dimension does not match the model")
    m, s = moments_from_sample(sample_generator(model, n, seed), x[None, :], "max")
    return McEstimate(float(m[0]), float(s[0]), n, seed, f"E max(x*Z), x={x.tolist()}")


def estimate_directional_chi(model, a, A, n: int, seed: int = 0) -> McEstimate:
    from .core import as_bits

    a = np.asarray(a, dtype=float)
    bits = as_bits(A, model.dim)
    if bits == 0:
        raise MaxStabError("subset must be nonempty")
    m, s = moments_from_sample(sample_generator(model, n, seed), a[None, :], "min", [bits])
    return McEstimate(float(m[0]), float(s[0]), n, seed, f"E min(a*Z over {bits:b})")


def gamma_monotonicity_check(alphas, g="square", n: int = 200_000, seed: int = 0):
    """Check that E g(Gamma(alpha)/alpha) does not increase along ``alphas``.

    ``g`` is a catalog name or a convex callable.  All alphas share their
    uniforms, so consecutive differences are paired.  Returns
    (ok, rows) where each row holds alpha, mean, stderr, and the paired
    difference to the previous alpha with its standard error.
    """
    alphas = [float(a) for a in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise MaxStabError("alphas must be strictly increasing")
    fn = CONVEX_CATALOG[g] if isinstance(g, str) else g
    U = uniforms(n, 1, seed, _GAMMA)[:, 0]
    rows = []
    prev = None
    ok = True
    for a in alphas:
        v = fn(gammaincinv(a, U) / a)
        row = {"alpha": a, "mean": float(v.mean()), "stderr": float(v.std(ddof=1) / math.sqrt(n))}
        if prev is not None:
            diff = v - prev
            row["diff"] = float(diff.mean())
            row["diff_se"] = float(diff.std(ddof=1) / math.sqrt(n))
            if row["diff"] > 3 * row["diff_se"] + 1e-12:
                ok = False
        rows.append(row)
        prev = v
    return ok, rows


# ---------------------------------------------------------------- triangular arrays

def gaussian_threshold(n: int) -> float:
    """u solving sqrt(2 pi) u exp(u^2 / 2) = n."""
    if n < 2:
        raise MaxStabError("need n >= 2 for the normalising threshold")
    f = lambda u: 0.5 * math.log(2 * math.pi) + math.log(u) + 0.5 * u * u - math.log(n)
    return brentq(f, 1e-8, 60.0, xtol=1e-14)


DEFAULT_PROBES = ((0.0, 0.0), (1.0, 1.0), (-0.5, 0.5), (0.5, -0.5), (1.5, 0.5))


def triangular_array_hr_demo(gamma, n_levels=(100, 1000, 10_000), reps: int = 10_000,
                             seed: int = 0, probes=None):
    """Rescaled maxima of Gaussian triangular arrays against the HR limit.

    At level n the correlations are exp(-gamma_ij / (4 log n)); the
    componentwise maximum M of n such vectors is rescaled to u_n (M - u_n)
    and its empirical CDF is compared to the HR law on Gumbel margins,
    G(x) = exp(-ell(exp(-x))).  Returns one dict per level.
    """
    from . import models as M

    if not isinstance(gamma, VariogramMatrix):
        gamma = validate_variogram(gamma)
    d = gamma.dim
    g = gamma.array()
    if probes is None:
        probes = [p[:d] if d <= 2 else tuple(p) + (p[0],) * (d - 2) for p in DEFAULT_PROBES]
    P = np.asarray(probes, dtype=float).reshape(-1, d)
    if d == 1:
        limit = np.exp(-np.exp(-P[:, 0]))
    else:
        model = M.HuslerReiss(gamma)
        vals = M.ell_batch(model, np.exp(-P), mc_n=1_000_000, seed=seed)[0]
        limit = np.exp(-vals)
    out = []
    for level, n in enumerate(n_levels):
        rho = np.exp(-g / (4 * math.log(n)))
        try:
            L = np.linalg.cholesky(rho).astype(np.float32)
        except np.linalg.LinAlgError:
            out.append({"n": n, "skipped": "correlation matrix not positive definite"})
            continue
        block = max(1, 2_000_000 // (n * d))
        maxima = np.empty((reps, d))
        for c, start in enumerate(range(0, reps, block)):
            r = min(block, reps - start)
            rng = stream(seed, _TRIANGULAR, level * 1_000_003 + c)
            Zn = rng.standard_normal((r, n, d), dtype=np.float32) @ L.T
            maxima[start:start + r] = Zn.max(axis=1)
        u = gaussian_threshold(n)
        X = u * (maxima - u)
        emp = np.array([np.mean(np.all(X <= p, axis=1)) for p in P])
        err = np.abs(emp - limit)
        out.append({
            "n": n,
            "u_n": u,
            "empirical": emp.tolist(),
            "limit": limit.tolist(),
            "discrepancy": err.tolist(),
            "max_discrepancy": float(err.max()),
            "mean_discrepancy": float(err.mean()),
        })
    return out


def is_samplable(model) -> bool:
    from . import models as M

    return isinstance(model, (M.Dirichlet, M.HuslerReiss, M.Choquet, M.Independent, M.FullyDependent))


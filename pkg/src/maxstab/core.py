"""Dimension-generic primitives: subset masks, sign-alternating subset sums,
variogram validation and simplex grids.

Subsets of the ground set {1, ..., d} are encoded as integer bitmasks where
bit ``i - 1`` stands for element ``i``.  Dense subset tables are numpy arrays
of length ``2**d`` indexed by mask, with entry 0 reserved for the empty set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

MAX_DIM = 20
EXACT_DIM_CAP = 12
GRID_POINT_LIMIT = 2_000_000


class MaxStabError(ValueError):
    """Base class for invalid inputs to the library."""


class DimensionError(MaxStabError):
    pass


class VariogramError(MaxStabError):
    pass


class TableError(MaxStabError):
    pass


@dataclass(frozen=True, order=True)
class SubsetMask:
    """A subset of {1, ..., dim} stored as a bitmask."""

    bits: int
    dim: int

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise DimensionError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        if not 0 <= self.bits < (1 << self.dim):
            raise MaxStabError(f"mask {self.bits} out of range for d={self.dim}")

    @classmethod
    def from_indices(cls, indices, dim: int) -> "SubsetMask":
        """Build from 1-based element indices."""
        return cls(indices_to_mask(indices, dim), dim)

    def indices(self) -> tuple[int, ...]:
        return mask_to_indices(self.bits)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, i: int) -> bool:
        return bool(self.bits >> (i - 1) & 1)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices())) + "}"


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def mask_to_indices(bits: int) -> tuple[int, ...]:
    out = []
    i = 1
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return tuple(out)


def indices_to_mask(indices, dim: int) -> int:
    bits = 0
    for i in indices:
        i = int(i)
        if not 1 <= i <= dim:
            raise MaxStabError(f"index {i} outside 1..{dim}")
        bits |= 1 << (i - 1)
    return bits


def full_mask(dim: int) -> int:
    return (1 << dim) - 1


def as_bits(A, dim: int | None = None) -> int:
    """Accept a SubsetMask, a plain int mask or an iterable of 1-based indices."""
    if isinstance(A, SubsetMask):
        return A.bits
    if isinstance(A, (int, np.integer)):
        return int(A)
    if dim is None:
        raise MaxStabError("dimension needed to convert an index list to a mask")
    return indices_to_mask(A, dim)


def enumerate_subsets(d: int, nonempty_only: bool = True) -> list[SubsetMask]:
    """All subsets of {1..d} in increasing-bits order."""
    if not 1 <= d <= MAX_DIM:
        raise DimensionError(f"dimension {d} outside 1..{MAX_DIM}")
    start = 1 if nonempty_only else 0
    return [SubsetMask(b, d) for b in range(start, 1 << d)]


def popcounts(d: int) -> np.ndarray:
    """Cardinality of every mask 0..2**d - 1."""
    sizes = np.zeros(1 << d, dtype=np.int64)
    for i in range(d):
        sizes[1 << i:1 << (i + 1)] = sizes[:1 << i] + 1
    return sizes


def subset_bits(A: int):
    """Iterate over all submasks of ``A`` including the empty one."""
    sub = A
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & A


def signed_subset_sum(f, A, sign_rule: str = "incl_excl") -> float:
    """Sign-alternating sum of a set function over the subsets of ``A``.

    ``incl_excl`` returns sum over nonempty I in A of (-1)**(|I|+1) f(I);
    ``moebius`` returns sum over I in A of (-1)**|A \\ I| f(I) with f(empty) = 0.

    ``f`` is any mapping or array indexed by integer masks.
    """
    bits = as_bits(A)
    if sign_rule not in ("incl_excl", "moebius"):
        raise MaxStabError(f"unknown sign rule {sign_rule!r}")
    size_a = popcount(bits)
    total = 0.0
    for sub in subset_bits(bits):
        if sub == 0:
            continue
        try:
            value = f[sub]
        except (KeyError, IndexError):
            raise TableError(f"table has no entry for subset {mask_to_indices(sub)}") from None
        k = popcount(sub)
        if sign_rule == "incl_excl":
            sign = 1.0 if k % 2 == 1 else -1.0
        else:
            sign = 1.0 if (size_a - k) % 2 == 0 else -1.0
        total += sign * float(value)
    return total


# Fast O(d 2^d) transforms on dense tables.

def zeta_subsets(values: np.ndarray, d: int) -> np.ndarray:
    """g(A) = sum over I in A of f(I)."""
    g = np.array(values, dtype=float, copy=True)
    for i in range(d):
        step = 1 << i
        view = g.reshape(-1, 2 * step)
        view[:, step:] += view[:, :step]
    return g


def moebius_subsets(values: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`zeta_subsets`."""
    g = np.array(values, dtype=float, copy=True)
    for i in range(d):
        step = 1 << i
        view = g.reshape(-1, 2 * step)
        view[:, step:] -= view[:, :step]
    return g


def zeta_supersets(values: np.ndarray, d: int) -> np.ndarray:
    """g(A) = sum over K containing A of f(K)."""
    g = np.array(values, dtype=float, copy=True)
    for i in range(d):
        step = 1 << i
        view = g.reshape(-1, 2 * step)
        view[:, :step] += view[:, step:]
    return g


def moebius_supersets(values: np.ndarray, d: int) -> np.ndarray:
    """g(A) = sum over K containing A of (-1)**|K \\ A| f(K)."""
    g = np.array(values, dtype=float, copy=True)
    for i in range(d):
        step = 1 << i
        view = g.reshape(-1, 2 * step)
        view[:, :step] -= view[:, step:]
    return g


@dataclass(frozen=True)
class VariogramMatrix:
    """Validated Huesler-Reiss parameter: symmetric, zero diagonal, CND."""

    gamma: tuple[tuple[float, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.gamma)

    def array(self) -> np.ndarray:
        return np.array(self.gamma, dtype=float)


def zero_sum_basis(d: int) -> np.ndarray:
    """Orthonormal basis (d x (d-1)) of the hyperplane {v : sum(v) = 0}."""
    # Helmert contrasts
    basis = np.zeros((d, d - 1))
    for k in range(1, d):
        basis[:k, k - 1] = 1.0
        basis[k, k - 1] = -k
        basis[:, k - 1] /= np.sqrt(k * (k + 1))
    return basis


def max_projected_eigenvalue(gamma: np.ndarray) -> float:
    d = gamma.shape[0]
    if d < 2:
        return 0.0
    P = zero_sum_basis(d)
    return float(np.linalg.eigvalsh(P.T @ gamma @ P).max())


def validate_variogram(gamma, tol_cnd: float = 1e-9) -> VariogramMatrix:
    """Check membership of the cone of conditionally negative definite
    variogram matrices and return an immutable copy.

    ``tol_cnd`` is relative to the largest absolute entry.
    """
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise VariogramError(f"variogram must be a square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise VariogramError("variogram has non-finite entries")
    scale = max(float(np.abs(g).max()), 1.0)
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * scale):
        i, j = np.unravel_index(np.argmax(np.abs(g - g.T)), g.shape)
        raise VariogramError(f"variogram not symmetric at ({i + 1},{j + 1})")
    if np.any(np.diag(g) != 0):
        i = int(np.flatnonzero(np.diag(g))[0])
        raise VariogramError(f"variogram diagonal entry ({i + 1},{i + 1}) is nonzero")
    if np.any(g < 0):
        i, j = np.argwhere(g < 0)[0]
        raise VariogramError(f"variogram entry ({i + 1},{j + 1}) is negative")
    top = max_projected_eigenvalue(g)
    if top > tol_cnd * scale:
        raise VariogramError(
            f"variogram not conditionally negative definite: projected eigenvalue {top:.3g}"
        )
    g = 0.5 * (g + g.T)
    return VariogramMatrix(tuple(tuple(float(v) for v in row) for row in g))


def validate_direction(a, dim: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise MaxStabError("direction must be a vector")
    if dim is not None and a.size != dim:
        raise DimensionError(f"direction has length {a.size}, expected {dim}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise MaxStabError("direction components must be finite and strictly positive")
    return a


def validate_alpha(alpha) -> tuple[float, ...]:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise MaxStabError("alpha must be a nonempty vector")
    for i, v in enumerate(a):
        if not np.isfinite(v) or v <= 0:
            raise MaxStabError(f"alpha[{i + 1}] = {v} must be finite and positive")
    return tuple(float(v) for v in a)


@dataclass(frozen=True)
class SimplexGrid:
    dim: int
    m: int
    points: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def descriptor(self) -> dict:
        return {"type": "simplex", "dim": self.dim, "m": self.m, "points": len(self)}

    def interior_directions(self) -> np.ndarray:
        """Grid points clipped below at 1/(4m) so every component is positive."""
        return np.maximum(self.points, 1.0 / (4 * self.m))


def default_grid_density(d: int) -> int:
    if d == 2:
        return 64
    if d == 3:
        return 16
    return 8


def _compositions(m: int, d: int):
    if d == 1:
        yield (m,)
        return
    for k in range(m, -1, -1):
        for rest in _compositions(m - k, d - 1):
            yield (k,) + rest


def simplex_grid(d: int, m: int | None = None, limit: int = GRID_POINT_LIMIT) -> SimplexGrid:
    """Lattice {k/m : k in N_0^d, sum k = m} on the unit simplex."""
    if d < 2:
        raise DimensionError("simplex grid needs d >= 2")
    if m is None:
        m = default_grid_density(d)
    if m < 2:
        raise MaxStabError("grid density m must be >= 2")
    count = comb(m + d - 1, d - 1)
    if count > limit:
        raise MaxStabError(f"simplex grid would have {count} points (limit {limit})")
    pts = np.array(list(_compositions(m, d)), dtype=float) / m
    return SimplexGrid(d, m, pts)

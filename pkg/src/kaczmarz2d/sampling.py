"""Deterministic seeded randomness for row and row-pair selection.

All draws go through a ``numpy.random.Generator`` seeded with PCG64, whose
integer state transitions and uniform-double mapping are identical across
platforms, so a seed pins the full draw sequence.  Pair selection follows the
law P(i, j) proportional to the squared cross-product-like constant

    w(i, j) = ||a_i||^2 ||a_j||^2 - |a_i a_j^*|^2,

stored as a cumulative table over ordered pairs (i, j), i != j, in
lexicographic order and sampled by inverse-CDF binary search.  The ordered
table carries total mass ||A||_F^4 - ||A A^*||_F^2; an unordered table with
doubled mass would sample the same unordered pairs with the same probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "make_rng",
    "DegenerateSampleError",
    "cross_product_sq",
    "PairDistribution",
    "build_pair_distribution",
    "sample_pair",
    "sample_pair_within",
    "subset_pair_weights",
    "simple_random_sample",
    "weighted_index",
    "PAIR_TABLE_CAP",
]

PAIR_TABLE_CAP = 4000


class DegenerateSampleError(ValueError):
    """All candidate pairs have zero weight (rows pairwise parallel)."""


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator with platform-stable draw sequences."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def cross_product_sq(op, i: int, j: int) -> float:
    """Squared cross-product-like constant of rows i and j, clamped at 0.

    Floating-point cancellation can push the difference slightly negative for
    near-parallel rows; the clamp keeps pair weights nonnegative.
    """
    if i == j:
        raise ValueError("the pair law excludes the diagonal (i == j)")
    v = op.row_norms_sq[i] * op.row_norms_sq[j] - abs(op.row_pair_inner(i, j)) ** 2
    return max(float(v), 0.0)


def _draw_cumulative(cum: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random() * cum[-1]
    return int(np.searchsorted(cum, u, side="right"))


@dataclass(frozen=True)
class PairDistribution:
    """Cumulative weight table over ordered row pairs (i, j), i != j."""

    m: int
    cumulative: np.ndarray  # length m*(m-1), nondecreasing
    total: float

    def weights(self) -> np.ndarray:
        """Individual pair weights recovered from the cumulative table."""
        return np.diff(self.cumulative, prepend=0.0)

    def decode(self, flat):
        """Map flat lexicographic pair index -> (i, j)."""
        flat = np.asarray(flat)
        i = flat // (self.m - 1)
        rem = flat - i * (self.m - 1)
        j = rem + (rem >= i)
        return i, j

    def sample(self, rng: np.random.Generator, size=None):
        """Draw (i, j) with probability w(i, j) / total; vectorised for ``size``."""
        if self.total <= 0.0:
            raise DegenerateSampleError("system rows span one direction")
        if size is None:
            i, j = self.decode(_draw_cumulative(self.cumulative, rng))
            return int(i), int(j)
        u = rng.random(size) * self.total
        return self.decode(np.searchsorted(self.cumulative, u, side="right"))


def build_pair_distribution(op, cap: int = PAIR_TABLE_CAP) -> PairDistribution:
    """Exact ordered-pair table for the whole matrix.

    O(m^2) memory; refuses above ``cap`` rows, where the subsampled variant
    (TRKS) is the practical choice.
    """
    m = op.shape[0]
    if m < 2:
        raise ValueError("pair sampling needs at least two rows")
    if m > cap:
        raise ValueError(
            f"pair table for m={m} rows exceeds the cap ({cap}); "
            "use the subsampled method TRKS instead of TRK"
        )
    rn2 = op.row_norms_sq
    weights = np.empty(m * (m - 1), dtype=np.float64)
    chunk = max(1, (1 << 22) // m)
    for start in range(0, m, chunk):
        idx = np.arange(start, min(start + chunk, m))
        g = op.gram_block(idx)
        w = rn2[idx, None] * rn2[None, :] - np.abs(g) ** 2
        np.maximum(w, 0.0, out=w)
        for t, i in enumerate(idx):
            weights[i * (m - 1):(i + 1) * (m - 1)] = np.delete(w[t], i)
    cum = np.cumsum(weights, out=weights)
    return PairDistribution(m=m, cumulative=cum, total=float(cum[-1]))


def sample_pair(dist: PairDistribution, rng: np.random.Generator) -> tuple[int, int]:
    """One ordered pair from the full-table law."""
    return dist.sample(rng)


def subset_pair_weights(op, indices) -> np.ndarray:
    """Pair-weight matrix w(i, j) restricted to ``indices`` (zero diagonal)."""
    idx = np.asarray(indices, dtype=np.intp)
    g = op.gram_submatrix(idx)
    rn2 = op.row_norms_sq[idx]
    w = rn2[:, None] * rn2[None, :] - np.abs(g) ** 2
    np.maximum(w, 0.0, out=w)
    np.fill_diagonal(w, 0.0)
    return w


def sample_pair_within(op, indices, rng: np.random.Generator) -> tuple[int, int]:
    """Pair from the cross-product law restricted to a sampled index set.

    Builds the O(|indices|^2) weight table for this call only.  Raises
    :class:`DegenerateSampleError` when every sampled pair is parallel, in
    which case the caller should draw a fresh indicator set (bounded retries).
    """
    idx = np.asarray(indices, dtype=np.intp)
    k = len(idx)
    if k < 2:
        raise ValueError("need at least two sampled rows to form a pair")
    w = subset_pair_weights(op, idx)
    cum = np.cumsum(w.ravel())
    if cum[-1] <= 0.0:
        raise DegenerateSampleError("all sampled row pairs are parallel")
    f = _draw_cumulative(cum, rng)
    a, b = divmod(f, k)
    return int(idx[a]), int(idx[b])


def simple_random_sample(m: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform without-replacement sample of ceil(fraction*m) row indices.

    Partial Fisher-Yates with a sparse override map, O(sample size) time and
    memory; the result is sorted ascending.  The size is raised to 2 when the
    ceiling is smaller, since two-row methods need at least a pair.
    """
    if m < 2:
        raise ValueError("need at least two rows to sample from")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"sampling fraction must lie in (0, 1), got {fraction}")
    k = int(np.ceil(fraction * m - 1e-12))
    k = min(max(k, 2), m)
    picked = np.empty(k, dtype=np.intp)
    swapped: dict[int, int] = {}
    for t in range(k):
        u = int(rng.integers(t, m))
        picked[t] = swapped.get(u, u)
        swapped[u] = swapped.get(t, t)
    picked.sort()
    return picked


def weighted_index(weights, rng: np.random.Generator) -> int:
    """Index i with probability weights[i] / sum(weights), by inverse CDF.

    An all-zero weight vector is an error: for the greedy selection rules it
    signals that the residual is exactly zero, i.e. the caller has converged.
    """
    w = np.asarray(weights, dtype=np.float64)
    cum = np.cumsum(w)
    if cum[-1] <= 0.0:
        raise DegenerateSampleError("all selection weights are zero")
    return _draw_cumulative(cum, rng)

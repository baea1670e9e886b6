"""Generators for the benchmark problem families.

Every generated system is consistent by construction: a solution is drawn
first and the right-hand side is computed from it, so the residual at the
planted solution is at the rounding level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import DenseMatrix, KroneckerOperator
from .solvers import LinearSystem

__all__ = [
    "TrigPolyProblem",
    "BlurModel",
    "gen_trig_poly",
    "gen_gaussian",
    "build_blur",
    "phantom",
]


@dataclass
class TrigPolyProblem:
    """Bandlimited-signal reconstruction system from nonuniform samples.

    ``m`` sample points on [0, 1), bandwidth ``r`` (so n = 2r + 1 Fourier
    coefficients), density-compensating weights ``w``, and the assembled
    weighted-exponential system.
    """

    m: int
    r: int
    t: np.ndarray
    w: np.ndarray
    system: LinearSystem


@dataclass
class BlurModel:
    """Separable blur A1 (x) A2 acting on column-stacked n x n images.

    A1 is a banded Toeplitz Gaussian kernel (half-bandwidth ``r_band``,
    width ``sigma``), A2 a banded Toeplitz moving average (half-bandwidth
    ``s_band``); the product is held as an implicit Kronecker operator.
    """

    n: int
    r_band: int
    s_band: int
    sigma: float
    operator: KroneckerOperator


def _sample_weights(t: np.ndarray) -> np.ndarray:
    """Midpoint gap weights with periodic extension; they sum to 1 exactly
    by telescoping."""
    m = len(t)
    prev = np.empty(m)
    nxt = np.empty(m)
    prev[1:] = t[:-1]
    prev[0] = t[-1] - 1.0
    nxt[:-1] = t[1:]
    nxt[-1] = t[0] + 1.0
    return (nxt - prev) / 2.0


def gen_trig_poly(m: int, r: int, rng: np.random.Generator) -> TrigPolyProblem:
    """Random nonuniform sampling system for a degree-r trigonometric polynomial.

    Rows are sqrt(w_j) * exp(2 pi i k t_j) for k = -r..r; the planted
    coefficient vector is standard complex Gaussian.
    """
    n = 2 * r + 1
    if m <= n:
        raise ValueError(f"need more samples than coefficients: m={m}, n={n}")
    while True:
        t = np.sort(rng.random(m))
        if np.all(np.diff(t) > 0.0):
            break
    w = _sample_weights(t)
    ks = np.arange(-r, r + 1)
    a = np.sqrt(w)[:, None] * np.exp(2j * np.pi * np.outer(t, ks))
    x_star = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    op = DenseMatrix(a)
    b = op.apply(x_star)
    return TrigPolyProblem(m=m, r=r, t=t, w=w, system=LinearSystem(op, b, x_star))


def gen_gaussian(m: int, n: int, rng: np.random.Generator) -> LinearSystem:
    """Consistent system with i.i.d. standard normal entries and solution."""
    if m < 2 or n < 2:
        raise ValueError("need at least a 2x2 system")
    a = rng.standard_normal((m, n))
    x_star = rng.standard_normal(n)
    op = DenseMatrix(a)
    b = op.apply(x_star.astype(np.complex128))
    return LinearSystem(op, b, x_star)


def build_blur(n: int, r_band: int, s_band: int, sigma: float) -> BlurModel:
    """Separable Gaussian/moving-average blur on n x n images."""
    if n < 2:
        raise ValueError("image side must be at least 2")
    if not 1 <= r_band < n or not 1 <= s_band < n:
        raise ValueError("half-bandwidths must satisfy 1 <= band < n")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    a1 = np.where(d <= r_band, np.exp(-(d**2) / (2.0 * sigma**2)) / (sigma * np.sqrt(2.0 * np.pi)), 0.0)
    a2 = np.where(d <= s_band, 1.0 / (2.0 * s_band - 1.0), 0.0)
    return BlurModel(n=n, r_band=r_band, s_band=s_band, sigma=sigma,
                     operator=KroneckerOperator(a1, a2))


def phantom(side: int = 64) -> np.ndarray:
    """Deterministic grayscale test image: smooth bumps plus sharp shapes.

    Values lie in [0, 255]; no randomness, so restored images are repeatable.
    """
    g = (np.arange(side) + 0.5) / side
    yy, xx = np.meshgrid(g, g, indexing="ij")
    img = np.full((side, side), 20.0)
    img += 150.0 * np.exp(-((xx - 0.38) ** 2 + (yy - 0.42) ** 2) / 0.035)
    img += 90.0 * np.exp(-((xx - 0.72) ** 2 + (yy - 0.28) ** 2) / 0.008)
    img[int(0.58 * side):int(0.86 * side), int(0.14 * side):int(0.34 * side)] += 70.0
    img[(xx - 0.68) ** 2 + (yy - 0.70) ** 2 < 0.018] += 55.0
    return np.clip(img, 0.0, 255.0)

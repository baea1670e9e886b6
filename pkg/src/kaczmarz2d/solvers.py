"""The Kaczmarz-family iterations behind one dispatch interface.

Twelve methods share the same two kernels and stopping logic:

======  =====================================================================
K       cyclic single-row sweep
RK      random row, probability ||a_i||^2 / ||A||_F^2
GRK     greedy randomized row (threshold on squared residuals)
GTRK    random row pair by squared norms, oblique two-row update
SRK     deterministic row with the largest homogeneous residual
SRKS    SRK restricted to a fresh simple random sample of rows
2DK     cyclic sweep over disjoint row pairs
TRK     random pair, probability prop. to the squared cross-product constant
TRKS    TRK restricted to a fresh simple random sample of rows
TGRK    greedy randomized pair (threshold on absolute residuals, 1-norm law)
TSRK    deterministic pair with the two largest homogeneous residuals
TSRKS   TSRK restricted to a fresh simple random sample of rows
======  =====================================================================

Two-row steps project the iterate orthogonally onto the intersection of both
row hyperplanes; when the selected rows are parallel (relative test against
``parallel_tol``) the step falls back to the single-row projection on the
first row.  The homogeneous residual of row i is |b_i - a_i x| / ||a_i||.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .operators import RowOperator, gram_eigenvalues
from .sampling import (
    DegenerateSampleError,
    build_pair_distribution,
    make_rng,
    sample_pair_within,
    simple_random_sample,
    weighted_index,
)

__all__ = [
    "METHODS",
    "ONE_ROW_METHODS",
    "TWO_ROW_METHODS",
    "RESIDUAL_METHODS",
    "LinearSystem",
    "SolverConfig",
    "SolveReport",
    "DivergenceError",
    "validate_system",
    "single_row_update",
    "project_two_rows",
    "gtrk_update",
    "cyclic_pair",
    "grk_candidates",
    "grk_select",
    "tgrk_candidates",
    "tgrk_select",
    "solve",
    "least_norm_oracle",
    "theory_factors",
    "fit_decay_factor",
]

METHODS = ("K", "RK", "GRK", "GTRK", "SRK", "SRKS", "2DK", "TRK", "TRKS", "TGRK", "TSRK", "TSRKS")
TWO_ROW_METHODS = frozenset({"GTRK", "2DK", "TRK", "TRKS", "TGRK", "TSRK", "TSRKS"})
ONE_ROW_METHODS = frozenset(METHODS) - TWO_ROW_METHODS
RESIDUAL_METHODS = frozenset({"GRK", "TGRK", "SRK", "TSRK"})  # maintain r = b - A x

_SELECT_RETRIES = 16


class DivergenceError(RuntimeError):
    """The monitored stopping metric grew far beyond its running minimum."""


@dataclass
class LinearSystem:
    """Operator, right-hand side, and (optionally) a known solution."""

    op: RowOperator
    b: np.ndarray
    x_star: np.ndarray | None = None

    def __post_init__(self):
        self.b = np.ascontiguousarray(self.b, dtype=np.complex128).reshape(-1)
        if self.x_star is not None:
            self.x_star = np.ascontiguousarray(self.x_star, dtype=np.complex128).reshape(-1)


@dataclass
class SolverConfig:
    """Method choice plus tolerances, fractions, seed and cadences.

    ``l`` is the row fraction drawn per iteration by TRKS, ``eta`` the one
    drawn by SRKS/TSRKS.  ``check_every`` sets how often the stopping rule is
    evaluated (1 keeps iteration counts faithful; raise it for speed when the
    method does not maintain a full residual).  ``budget_seconds`` /
    ``budget_iters`` bound a run regardless of the tolerance.
    """

    method: str = "TRK"
    tol: float = 1e-6
    stop_rule: str = "residual"  # or "relative-error"
    max_iter: int = 800_000
    seed: int = 0
    l: float = 0.01
    eta: float = 0.1
    parallel_tol: float = 1e-12
    check_every: int = 1
    residual_refresh_every: int = 1000
    x0: np.ndarray | None = None
    pair_cap: int = 4000
    budget_seconds: float | None = None
    budget_iters: int | None = None

    def canonical_method(self) -> str:
        name = str(self.method).upper()
        if name not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        return name

    def validate(self, system: LinearSystem | None = None) -> None:
        self.canonical_method()
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.stop_rule not in ("residual", "relative-error"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        for name in ("l", "eta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.parallel_tol < 0.0:
            raise ValueError("parallel_tol must be nonnegative")
        if self.check_every < 1 or self.residual_refresh_every < 1:
            raise ValueError("check_every and residual_refresh_every must be >= 1")
        if self.stop_rule == "relative-error" and system is not None and system.x_star is None:
            raise ValueError("relative-error stopping needs a known solution x_star")


@dataclass
class SolveReport:
    """Outcome of one solve: final iterate, counters and sampled histories."""

    x: np.ndarray
    converged: bool
    iterations: int
    residual_history: list[tuple[int, float]]
    error_history: list[tuple[int, float]] | None
    elapsed_seconds: float
    method: str
    final_residual: float
    final_error: float | None
    fallback_steps: int = 0
    stopped_by: str = "tol"  # "tol" | "max_iter" | "budget"


def validate_system(system: LinearSystem) -> None:
    """Reject systems no method can handle: zero rows, nonfinite data, bad shapes."""
    op, b = system.op, system.b
    m, n = op.shape
    if b.shape != (m,):
        raise ValueError(f"right-hand side must have length {m}, got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains NaN or Inf entries")
    if not np.all(op.row_norms_sq > 0.0):
        bad = int(np.argmin(op.row_norms_sq))
        raise ValueError(f"matrix row {bad} is identically zero; every projection divides by it")
    if system.x_star is not None and system.x_star.shape != (n,):
        raise ValueError(f"x_star must have length {n}, got {system.x_star.shape}")


# ---------------------------------------------------------------------------
# projection kernels


def _single_coeff(op, b, x, i, ri=None) -> complex:
    if ri is None:
        ri = complex(b[i]) - op.row_dot(i, x)
    return ri / op.row_norms_sq[i]


def _two_row_coeffs(op, b, x, i, j, parallel_tol, ri=None, rj=None):
    """Coefficients (gamma, lambda) of the two-hyperplane projection.

    Returns ([(i, gamma), (j, lambda)], False), or the single-row fallback
    ([(i, coeff)], True) when the rows fail the relative parallel test.
    ``ri``/``rj`` let callers that maintain the residual pass b_i - a_i x in.
    """
    ni = op.row_norms_sq[i]
    nj = op.row_norms_sq[j]
    c = op.row_pair_inner(i, j)
    cross = ni * nj - abs(c) ** 2
    if cross <= parallel_tol * ni * nj:
        return [(i, _single_coeff(op, b, x, i, ri))], True
    if ri is None:
        ri = complex(b[i]) - op.row_dot(i, x)
    if rj is None:
        rj = complex(b[j]) - op.row_dot(j, x)
    gamma = (nj * ri - c * rj) / cross
    lam = (ni * rj - np.conj(c) * ri) / cross
    return [(i, gamma), (j, lam)], False


def _gtrk_coeffs(op, b, x, i, j, parallel_tol, ri=None, rj=None):
    """Same oblique projection written with the normalised correlation mu."""
    ni = op.row_norms[i]
    nj = op.row_norms[j]
    mu = op.row_pair_inner(j, i) / (nj * ni)  # a_j a_i^* / (||a_j|| ||a_i||)
    denom = 1.0 - abs(mu) ** 2
    if denom <= parallel_tol:
        return [(i, _single_coeff(op, b, x, i, ri))], True
    if ri is None:
        ri = complex(b[i]) - op.row_dot(i, x)
    if rj is None:
        rj = complex(b[j]) - op.row_dot(j, x)
    r1 = ri / ni
    r2 = rj / nj
    gamma = (r1 - np.conj(mu) * r2) / (denom * ni)
    lam = (r2 - mu * r1) / (denom * nj)
    return [(i, gamma), (j, lam)], False


def _apply_coeffs(op, x, coeffs):
    x_next = np.array(x, dtype=np.complex128, copy=True)
    for i, c in coeffs:
        op.add_scaled_row_conj(x_next, i, c)
    return x_next


def single_row_update(op, b, x, i) -> np.ndarray:
    """Project x onto the hyperplane a_i x = b_i."""
    return _apply_coeffs(op, x, [(i, _single_coeff(op, b, x, i))])


def project_two_rows(op, b, x, i, j, parallel_tol: float = 1e-12):
    """Project x onto the intersection of the row-i and row-j hyperplanes.

    Returns (x_next, used_fallback); after a non-fallback step both selected
    equations are satisfied to roundoff.
    """
    if i == j:
        raise ValueError("two-row projection needs distinct rows")
    coeffs, fb = _two_row_coeffs(op, b, x, i, j, parallel_tol)
    return _apply_coeffs(op, x, coeffs), fb


def gtrk_update(op, b, x, i, j, parallel_tol: float = 1e-12):
    """Two-row update in correlation form; algebraically equal to project_two_rows."""
    if i == j:
        raise ValueError("two-row projection needs distinct rows")
    coeffs, fb = _gtrk_coeffs(op, b, x, i, j, parallel_tol)
    return _apply_coeffs(op, x, coeffs), fb


def cyclic_pair(k: int, m: int) -> tuple[int, int]:
    """k-th pair of the cyclic two-row sweep: (0,1), (2,3), ... with a wrap
    pair (m-1, 0) appended when m is odd."""
    if m < 2:
        raise ValueError("cyclic pairs need at least two rows")
    p = k % ((m + 1) // 2)
    return 2 * p, (2 * p + 1) % m


# ---------------------------------------------------------------------------
# selection rules


def grk_candidates(op, r) -> np.ndarray:
    """Greedy candidate mask: rows whose squared residual clears the threshold
    blending the max and the Frobenius-average of homogeneous residuals."""
    r2 = np.abs(r) ** 2
    total = r2.sum()
    h2 = r2 / op.row_norms_sq
    imax = int(np.argmax(h2))
    eps_k = 0.5 * (h2[imax] / total + 1.0 / op.frobenius_norm**2)
    mask = r2 >= eps_k * total * op.row_norms_sq
    mask[imax] = True  # member in exact arithmetic; guard the boundary ulp
    return mask


def grk_select(op, r, rng) -> int:
    mask = grk_candidates(op, r)
    return weighted_index(np.where(mask, np.abs(r) ** 2, 0.0), rng)


def tgrk_candidates(op, r):
    """Candidate mask of the two-row greedy rule, or None when degenerate.

    The threshold uses 1-norms with the top row's contribution removed, so it
    needs at least two rows carrying residual.
    """
    absr = np.abs(r)
    h = absr / op.row_norms
    imax = int(np.argmax(h))
    varrho = absr[imax]
    rho = op.row_norms[imax]
    denom_r = absr.sum() - varrho
    denom_a = op.l21_norm - rho
    if denom_r <= 0.0 or denom_a <= 0.0:
        return None
    h_rest = h.copy()
    h_rest[imax] = -np.inf
    irest = int(np.argmax(h_rest))
    eps_k = 0.5 * (h_rest[irest] / denom_r + 1.0 / denom_a)
    mask = absr >= eps_k * denom_r * op.row_norms
    mask[imax] = True
    mask[irest] = True
    return mask, imax


def tgrk_select(op, r, rng, retries: int = _SELECT_RETRIES):
    """(i, j) drawn from the masked absolute residuals, 1-norm law.

    Falls back to a single-row step when the candidate set is a singleton or
    when ``retries`` draws fail to produce j != i; returns None when the
    residual is identically zero.
    """
    absr = np.abs(r)
    if absr.max() == 0.0:
        return None
    cand = tgrk_candidates(op, r)
    if cand is None:
        return (int(np.argmax(absr / op.row_norms)),)
    mask, imax = cand
    if int(mask.sum()) == 1:
        return (imax,)
    w = np.where(mask, absr, 0.0)
    i = weighted_index(w, rng)
    for _ in range(retries):
        j = weighted_index(w, rng)
        if j != i:
            return i, j
    return (i,)


def _top_two_rows(h):
    i = int(np.argmax(h))
    rest = h.copy()
    rest[i] = -np.inf
    return i, int(np.argmax(rest))


def _make_selector(method, op, b, config, rng):
    """Per-method closure (x, r, k) -> row tuple, or None when the visible
    residual is exactly zero and the driver should run a full check."""
    m = op.shape[0]

    if method == "K":
        return lambda x, r, k: (k % m,)

    if method == "2DK":
        return lambda x, r, k: cyclic_pair(k, m)

    if method == "RK":
        cum = np.cumsum(op.row_norms_sq)

        def sel_rk(x, r, k):
            u = rng.random() * cum[-1]
            return (int(np.searchsorted(cum, u, side="right")),)

        return sel_rk

    if method == "GTRK":
        cum = np.cumsum(op.row_norms_sq)

        def sel_gtrk(x, r, k):
            i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            for _ in range(1000):
                j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                if j != i:
                    return i, j
            w = op.row_norms_sq.copy()
            w[i] = 0.0
            return i, weighted_index(w, rng)

        return sel_gtrk

    if method == "TRK":
        dist = build_pair_distribution(op, cap=config.pair_cap)
        return lambda x, r, k: dist.sample(rng)

    if method == "TRKS":

        def sel_trks(x, r, k):
            last: Exception | None = None
            for _ in range(_SELECT_RETRIES):
                gamma = simple_random_sample(m, config.l, rng)
                try:
                    return sample_pair_within(op, gamma, rng)
                except DegenerateSampleError as exc:
                    last = exc
            raise DegenerateSampleError(
                f"{_SELECT_RETRIES} indicator sets in a row were pairwise parallel"
            ) from last

        return sel_trks

    if method == "GRK":

        def sel_grk(x, r, k):
            if not np.any(r):
                return None
            return (grk_select(op, r, rng),)

        return sel_grk

    if method == "TGRK":
        return lambda x, r, k: tgrk_select(op, r, rng)

    if method in ("SRK", "TSRK"):
        two = method == "TSRK"

        def sel_semi(x, r, k):
            h = np.abs(r) / op.row_norms
            if h.max() == 0.0:
                return None
            if not two:
                return (int(np.argmax(h)),)
            return _top_two_rows(h)

        return sel_semi

    if method in ("SRKS", "TSRKS"):
        two = method == "TSRKS"

        def sel_sampled(x, r, k):
            # residual entries are computed only for the sampled rows
            for _ in range(2):
                phi = simple_random_sample(m, config.eta, rng)
                vals = np.abs(b[phi] - op.rows_dot(phi, x)) / op.row_norms[phi]
                if vals.max() > 0.0:
                    if not two:
                        return (int(phi[int(np.argmax(vals))]),)
                    a, bb = _top_two_rows(vals)
                    return int(phi[a]), int(phi[bb])
            return None

        return sel_sampled

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# driver


def _relative_error_sq(x, x_star) -> float:
    num = float(np.sum(np.abs(x - x_star) ** 2))
    den = float(np.sum(np.abs(x) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def solve(system: LinearSystem, config: SolverConfig | None = None, callback=None) -> SolveReport:
    """Run the configured method from x0 (zero unless overridden).

    The stopping metric is the residual 2-norm, or the squared relative error
    ||x_star - x||^2 / ||x||^2 under the "relative-error" rule; it is
    evaluated every ``check_every`` iterations.  A growth of the metric by
    1e6 over its running minimum raises :class:`DivergenceError`, which flags
    inconsistent or ill-posed input.  ``callback(k, x, rows)`` is invoked
    after every update with the fresh iterate and the selected row indices.
    """
    config = config or SolverConfig()
    validate_system(system)
    config.validate(system)
    method = config.canonical_method()
    op, b = system.op, system.b
    m, n = op.shape
    rng = make_rng(config.seed)

    if config.x0 is None:
        x = np.zeros(n, dtype=np.complex128)
    else:
        x = np.array(config.x0, dtype=np.complex128, copy=True).reshape(-1)
        if x.shape != (n,):
            raise ValueError(f"x0 must have length {n}")

    relative = config.stop_rule == "relative-error"
    x_star = system.x_star
    maintain = method in RESIDUAL_METHODS
    selector = _make_selector(method, op, b, config, rng)
    r = b - op.apply(x) if maintain else None

    res_hist: list[tuple[int, float]] = []
    err_hist: list[tuple[int, float]] | None = [] if x_star is not None else None
    best_metric = math.inf
    fallback_steps = 0
    converged = False
    stopped_by = "max_iter"
    max_iter = config.max_iter if config.budget_iters is None else min(
        config.max_iter, config.budget_iters
    )
    started = time.perf_counter()

    k = 0
    while True:
        at_cap = k >= max_iter
        if k % config.check_every == 0 or at_cap:
            res = float(np.linalg.norm(r)) if maintain else None
            err = _relative_error_sq(x, x_star) if x_star is not None else None
            if relative:
                metric = err
            else:
                if res is None:
                    res = float(np.linalg.norm(b - op.apply(x)))
                metric = res
            if res is not None:
                res_hist.append((k, res))
            if err_hist is not None:
                err_hist.append((k, err))
            if metric < config.tol:
                converged = True
                stopped_by = "tol"
                break
            best_metric = min(best_metric, metric)
            if metric > 1e6 * best_metric:
                raise DivergenceError(
                    f"{method}: stopping metric grew to {metric:.3e} from a minimum of "
                    f"{best_metric:.3e}; the system looks inconsistent or ill-posed"
                )
        if at_cap:
            break
        if config.budget_seconds is not None and time.perf_counter() - started >= config.budget_seconds:
            stopped_by = "budget"
            break

        rows = selector(x, r, k)
        if rows is None:
            # the residual visible to the selector vanished; confirm against
            # a freshly computed full residual before deciding
            res = float(np.linalg.norm(b - op.apply(x)))
            res_hist.append((k, res))
            if res < config.tol or res == 0.0:
                converged = True
                stopped_by = "tol"
                break
            if maintain:
                r = b - op.apply(x)  # maintained copy had drifted to zero
                continue
            h = np.abs(b - op.apply(x)) / op.row_norms
            rows = _top_two_rows(h) if method in TWO_ROW_METHODS else (int(np.argmax(h)),)

        # maintained residual entries are exactly b_i - a_i x (refreshed
        # against drift), so reuse them instead of recomputing row products
        ri = complex(r[rows[0]]) if maintain else None
        if len(rows) == 1:
            coeffs = [(rows[0], _single_coeff(op, b, x, rows[0], ri))]
        else:
            rj = complex(r[rows[1]]) if maintain else None
            kernel = _gtrk_coeffs if method == "GTRK" else _two_row_coeffs
            coeffs, fb = kernel(op, b, x, rows[0], rows[1], config.parallel_tol, ri, rj)
            fallback_steps += fb

        x_new = x.copy()
        for i, c in coeffs:
            op.add_scaled_row_conj(x_new, i, c)
        if maintain:
            if (k + 1) % config.residual_refresh_every == 0:
                r = b - op.apply(x_new)
            else:
                r = r - op.apply_rows_conj(coeffs)
        if callback is not None:
            callback(k, x_new, tuple(int(i) for i, _ in coeffs))
        x = x_new
        k += 1

    elapsed = time.perf_counter() - started
    final_res = float(np.linalg.norm(b - op.apply(x)))
    final_err = _relative_error_sq(x, x_star) if x_star is not None else None
    return SolveReport(
        x=x,
        converged=converged,
        iterations=k,
        residual_history=res_hist,
        error_history=err_hist,
        elapsed_seconds=elapsed,
        method=method,
        final_residual=final_res,
        final_error=final_err,
        fallback_steps=fallback_steps,
        stopped_by=stopped_by,
    )


# ---------------------------------------------------------------------------
# diagnostics


def least_norm_oracle(system: LinearSystem, cap: int = 512) -> np.ndarray:
    """Minimum-norm solution via normal equations on the short side.

    Solves A A^* y = b (m <= n) or A^* A x = A^* b (m > n) with LAPACK's
    pivoted elimination; refuses rank-deficient short sides, so it is an
    independent reference for the solvers' least-norm limit.
    """
    validate_system(system)
    op, b = system.op, system.b
    m, n = op.shape
    if min(m, n) > cap:
        raise ValueError(f"least-norm oracle is capped at short side {cap}")
    if m <= n:
        g = op.gram_submatrix(np.arange(m))
        rhs = b
    else:
        g = op.adjoint_gram()
        rhs = op.apply_adjoint(b)
    g = 0.5 * (g + g.conj().T)
    eigs = np.linalg.eigvalsh(g)
    if eigs[0] <= 1e-12 * max(eigs[-1], 0.0) or eigs[-1] == 0.0:
        raise ValueError("short-side Gram matrix is numerically singular")
    y = np.linalg.solve(g, rhs)
    return op.apply_adjoint(y) if m <= n else y


def theory_factors(system: LinearSystem, cap: int = 512) -> dict:
    """Norms, spectrum and per-iteration convergence-factor bounds.

    ``rk_factor`` and ``trk_factor`` are guaranteed contraction factors in
    [0, 1) for any input of rank >= 2 and the latter is strictly smaller; both
    are checked here.  The greedy/semi two-row bounds (``tgrk_factor``,
    ``tsrk_factor``) are evaluated with the largest row norm in place of the
    per-iteration one and may be vacuous (>= 1) or undefined (nan) when the
    smallest Gram eigenvalue is below the squared largest row norm.
    """
    validate_system(system)
    op = system.op
    eigs = gram_eigenvalues(op, cap=cap)
    lam_max = float(eigs[-1])
    nonzero = eigs[eigs > 1e-10 * lam_max]
    lam_min = float(nonzero[0])
    f2 = op.frobenius_norm**2
    aa_fro_sq = float(np.sum(eigs**2))  # ||A A^*||_F^2 = sum sigma^4
    sigma_max = math.sqrt(lam_max)
    omega = op.l21_norm - float(op.row_norms.min())
    rho_max = float(op.row_norms.max())

    pair_mass = f2 * f2 - aa_fro_sq
    if pair_mass <= 0.0:
        raise ValueError("rows span a single direction; pair-law factors are undefined")
    rk_factor = 1.0 - lam_min / f2
    trk_factor = 1.0 - (2.0 * f2 * f2 - 2.0 * f2 * lam_max) / pair_mass * (lam_min / f2)
    if not 0.0 <= trk_factor < rk_factor < 1.0:
        raise ArithmeticError(
            f"factor ordering violated: trk={trk_factor!r}, rk={rk_factor!r}"
        )

    sqrt_lam = math.sqrt(lam_min)
    if omega > rho_max and op.l21_norm > rho_max:
        half = 0.5 * ((sqrt_lam - rho_max) / (omega - rho_max)
                      + (sqrt_lam - rho_max) / (op.l21_norm - rho_max))
        tgrk_factor = 1.0 - half**2
    else:
        tgrk_factor = math.nan
    if omega > rho_max:
        tsrk_factor = 1.0 - (lam_min - rho_max**2) / (omega**2 - rho_max**2)
    else:
        tsrk_factor = math.nan

    return {
        "m": op.shape[0],
        "n": op.shape[1],
        "frobenius_norm": op.frobenius_norm,
        "spectral_norm": sigma_max,
        "l21_norm": op.l21_norm,
        "aa_adjoint_frobenius_sq": aa_fro_sq,
        "gram_lambda_min_nonzero": lam_min,
        "omega": omega,
        "rho_max": rho_max,
        "rk_factor": rk_factor,
        "trk_factor": trk_factor,
        "tgrk_factor": tgrk_factor,
        "tsrk_factor": tsrk_factor,
    }


def fit_decay_factor(squared_errors: np.ndarray) -> float:
    """Per-iteration geometric decay factor of a squared-error trajectory.

    Least-squares slope of log(e_k^2) against k over the stretch above the
    floating-point floor (1e-26 of the initial value).
    """
    e2 = np.asarray(squared_errors, dtype=np.float64)
    if e2.size < 2 or e2[0] <= 0.0:
        raise ValueError("need at least two positive squared errors")
    keep = e2 > e2[0] * 1e-26
    keep &= e2 > 0.0
    ks = np.flatnonzero(keep)
    if ks.size < 2:
        raise ValueError("trajectory collapsed immediately; nothing to fit")
    slope = np.polyfit(ks, np.log(e2[ks]), 1)[0]
    return float(np.exp(slope))

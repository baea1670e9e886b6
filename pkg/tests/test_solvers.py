import numpy as np
import pytest

from kaczmarz2d import (
    METHODS,
    DenseMatrix,
    LinearSystem,
    SolverConfig,
    gen_gaussian,
    gen_trig_poly,
    least_norm_oracle,
    make_rng,
    solve,
    theory_factors,
    validate_system,
)
from kaczmarz2d.solvers import (
    RESIDUAL_METHODS,
    fit_decay_factor,
    grk_candidates,
    grk_select,
    tgrk_candidates,
    tgrk_select,
)


def identity_system(n):
    b = np.arange(1.0, n + 1.0)
    return LinearSystem(DenseMatrix(np.eye(n)), b, b.copy())


def test_validate_system_rejects_zero_rows_and_bad_shapes():
    with pytest.raises(ValueError, match="identically zero"):
        validate_system(LinearSystem(DenseMatrix(np.array([[1.0, 0.0], [0.0, 0.0]])), np.ones(2)))
    with pytest.raises(ValueError, match="length"):
        validate_system(LinearSystem(DenseMatrix(np.eye(2)), np.ones(3)))
    with pytest.raises(ValueError, match="NaN"):
        validate_system(LinearSystem(DenseMatrix(np.eye(2)), np.array([1.0, np.nan])))


def test_config_validation():
    sys_ = identity_system(3)
    with pytest.raises(ValueError, match="unknown method"):
        solve(sys_, SolverConfig(method="nope"))
    with pytest.raises(ValueError, match="eta"):
        solve(sys_, SolverConfig(eta=1.5))
    with pytest.raises(ValueError, match="x_star"):
        solve(LinearSystem(DenseMatrix(np.eye(2)), np.ones(2)),
              SolverConfig(stop_rule="relative-error"))
    with pytest.raises(ValueError, match="tol"):
        solve(sys_, SolverConfig(tol=0.0))


def test_grk_select_concentrated_residual():
    op = DenseMatrix(np.eye(3))
    r = np.array([0.0, 2.0, 0.0], dtype=complex)
    rng = make_rng(0)
    assert all(grk_select(op, r, rng) == 1 for _ in range(10))


def test_grk_candidates_identity_example():
    # identity with r = (3, 1): threshold keeps only the first row
    op = DenseMatrix(np.eye(2))
    mask = grk_candidates(op, np.array([3.0, 1.0], dtype=complex))
    assert mask.tolist() == [True, False]


def test_grk_uniform_residual_keeps_all_rows():
    op = DenseMatrix(np.eye(4))
    mask = grk_candidates(op, np.ones(4, dtype=complex))
    assert mask.all()


def test_tgrk_select_two_hot_rows():
    op = DenseMatrix(np.eye(4))
    r = np.array([0.0, 1.5, 0.0, 0.5], dtype=complex)
    rng = make_rng(1)
    for _ in range(10):
        got = tgrk_select(op, r, rng)
        assert set(got) <= {1, 3} and len(got) == 2


def test_tgrk_pair_symmetry_frequencies():
    op = DenseMatrix(np.eye(3))
    r = np.array([1.0, 1.0, 0.0], dtype=complex)  # two equal candidates
    rng = make_rng(2)
    n = 20_000
    first = 0
    for _ in range(n):
        i, j = tgrk_select(op, r, rng)
        assert {i, j} == {0, 1}
        first += i == 0
    se = np.sqrt(0.25 / n)
    assert abs(first / n - 0.5) <= 4 * se


def test_tgrk_candidates_match_brute_force_on_diagonal_fixture():
    op = DenseMatrix(np.diag([1.0, 2.0, 3.0, 4.0]))
    r = np.array([0.5, 3.0, 1.2, 2.0], dtype=complex)
    mask, imax = tgrk_candidates(op, r)
    absr, rn = np.abs(r), op.row_norms
    h = absr / rn
    im = int(np.argmax(h))
    denom_r = absr.sum() - absr[im]
    denom_a = op.l21_norm - rn[im]
    rest = h.copy()
    rest[im] = -np.inf
    eps = 0.5 * (rest.max() / denom_r + 1.0 / denom_a)
    want = absr >= eps * denom_r * rn
    assert imax == im
    assert mask.tolist() == want.tolist()


def test_tgrk_single_row_fallbacks():
    op = DenseMatrix(np.eye(3))
    # one nonzero residual entry: no second row to pair with
    got = tgrk_select(op, np.array([0.0, 2.0, 0.0], complex), make_rng(3))
    assert got == (1,)
    assert tgrk_select(op, np.zeros(3, complex), make_rng(4)) is None


def test_semi_selection_examples():
    # homogeneous residuals (0.1, 0.9, 0.5) on unit rows
    sys_ = LinearSystem(DenseMatrix(np.eye(3)), np.array([0.1, 0.9, 0.5]))
    rep = solve(sys_, SolverConfig(method="SRK", tol=1e-15, max_iter=1))
    assert rep.residual_history[0][1] == pytest.approx(np.linalg.norm([0.1, 0.9, 0.5]))
    rows = []
    solve(sys_, SolverConfig(method="TSRK", tol=1e-15, max_iter=1),
          callback=lambda k, x, sel: rows.append(sel))
    assert rows[0] == (1, 2)
    # exact tie: lowest index wins
    tie = LinearSystem(DenseMatrix(np.eye(4)), np.array([0.7, 0.0, 0.0, 0.7]))
    rows.clear()
    solve(tie, SolverConfig(method="SRK", tol=1e-15, max_iter=1),
          callback=lambda k, x, sel: rows.append(sel))
    assert rows[0] == (0,)
    # two rows: always the only pair (largest homogeneous residual first)
    two = LinearSystem(DenseMatrix(np.eye(2)), np.array([1.0, 2.0]))
    rows.clear()
    solve(two, SolverConfig(method="TSRK", tol=1e-15, max_iter=1),
          callback=lambda k, x, sel: rows.append(sel))
    assert set(rows[0]) == {0, 1}


def test_sampled_semi_reduces_to_full_when_sample_is_everything():
    sys_ = gen_gaussian(10, 4, make_rng(5))
    # eta close to 1 makes the indicator set the whole row set
    rows_srks, rows_srk = [], []
    solve(sys_, SolverConfig(method="SRKS", eta=0.95, seed=9, tol=1e-12, max_iter=25),
          callback=lambda k, x, sel: rows_srks.append(sel))
    solve(sys_, SolverConfig(method="SRK", seed=9, tol=1e-12, max_iter=25),
          callback=lambda k, x, sel: rows_srk.append(sel))
    assert rows_srks == rows_srk


def test_identity_iteration_counts():
    # deterministic selections solve one (or two) fresh coordinates per step
    for n in (6, 7):
        sys_ = identity_system(n)
        for method, want in (("K", n), ("SRK", n), ("GRK", n),
                             ("2DK", -(-n // 2)), ("TSRK", -(-n // 2)), ("TGRK", -(-n // 2))):
            rep = solve(sys_, SolverConfig(method=method, seed=1))
            assert rep.converged, method
            assert rep.iterations == want, (method, n, rep.iterations)
        for method in ("RK", "TRK", "TRKS", "GTRK", "SRKS", "TSRKS"):
            rep = solve(sys_, SolverConfig(method=method, seed=1, l=0.5, eta=0.5))
            assert rep.converged and rep.final_residual < 1e-6, method


def test_solve_determinism_bitwise():
    sys_ = gen_gaussian(40, 12, make_rng(6))
    for method in METHODS:
        cfg = SolverConfig(method=method, seed=77, tol=1e-10)
        rows1, rows2 = [], []
        rep1 = solve(sys_, cfg, callback=lambda k, x, sel: rows1.append(sel))
        rep2 = solve(sys_, cfg, callback=lambda k, x, sel: rows2.append(sel))
        assert rep1.iterations == rep2.iterations
        assert rows1 == rows2
        assert np.array_equal(rep1.x, rep2.x), method


@pytest.mark.parametrize("method", sorted(METHODS))
def test_projection_geometry_every_method(method):
    sys_ = gen_gaussian(60, 20, make_rng(7))
    x_star = sys_.x_star
    iterates = [np.zeros(20, dtype=complex)]
    solve(sys_, SolverConfig(method=method, seed=3, tol=1e-300, max_iter=150),
          callback=lambda k, x, sel: iterates.append(x.copy()))
    errs = [float(np.sum(np.abs(z - x_star) ** 2)) for z in iterates]
    floor = errs[0] * 1e-14  # below this the iterate jitters at machine precision
    for k in range(len(iterates) - 1):
        if errs[k] <= floor:
            break
        step = float(np.sum(np.abs(iterates[k + 1] - iterates[k]) ** 2))
        lhs = errs[k] - errs[k + 1]
        scale = max(errs[k], step, 1e-30)
        # orthogonal projection: error loss equals squared step length
        assert abs(lhs - step) <= 1e-8 * scale
        assert errs[k + 1] <= errs[k] * (1 + 1e-10) + 1e-20


@pytest.mark.parametrize("method", sorted(METHODS))
def test_least_norm_limit(method):
    sys_ = gen_gaussian(30, 75, make_rng(8))  # underdetermined
    oracle = least_norm_oracle(sys_)
    rep = solve(sys_, SolverConfig(method=method, seed=5, tol=1e-9))
    assert rep.converged
    assert np.linalg.norm(rep.x - oracle) <= 1e-6 * np.linalg.norm(oracle)


def test_least_norm_limit_complex_fixture():
    prob = gen_trig_poly(60, 8, make_rng(9))
    oracle = least_norm_oracle(prob.system)
    rep = solve(prob.system, SolverConfig(method="TSRK", seed=2, tol=1e-10))
    assert np.linalg.norm(rep.x - oracle) <= 1e-6 * np.linalg.norm(oracle)


def test_maintained_residual_drift_is_bounded():
    sys_ = gen_gaussian(80, 40, make_rng(10))
    # never refresh: the recorded residual norms are the maintained ones
    cfg = SolverConfig(method="SRK", seed=1, tol=1e-300, max_iter=3000,
                       residual_refresh_every=10**9, check_every=1)
    rep = solve(sys_, cfg)
    maintained = rep.residual_history[-1][1]
    x = rep.x
    fresh = rep.final_residual
    bound = 1e-8 * (np.linalg.norm(sys_.b)
                    + sys_.op.frobenius_norm * np.linalg.norm(x))
    assert abs(maintained - fresh) <= bound


def test_inconsistent_system_does_not_converge():
    op = DenseMatrix(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    sys_ = LinearSystem(op, np.array([0.0, 1.0, 2.0]))  # rows 0/1 contradict
    rep = solve(sys_, SolverConfig(method="RK", seed=0, max_iter=500))
    assert not rep.converged
    assert rep.iterations == 500


def test_budget_iters_and_wallclock():
    sys_ = gen_gaussian(50, 20, make_rng(11))
    rep = solve(sys_, SolverConfig(method="SRK", budget_iters=7, tol=1e-300))
    assert rep.iterations == 7 and rep.stopped_by == "max_iter"
    rep = solve(sys_, SolverConfig(method="SRK", budget_seconds=0.05, tol=1e-300,
                                   max_iter=10**9, check_every=10**6))
    assert rep.stopped_by == "budget"
    assert rep.elapsed_seconds < 1.0


def test_x0_override_and_immediate_convergence():
    sys_ = identity_system(4)
    rep = solve(sys_, SolverConfig(method="K", x0=sys_.x_star))
    assert rep.converged and rep.iterations == 0


def test_report_invariants():
    sys_ = gen_gaussian(40, 10, make_rng(12))
    cfg = SolverConfig(method="GRK", seed=3, stop_rule="relative-error", tol=1e-8)
    rep = solve(sys_, cfg)
    assert rep.converged
    assert rep.error_history[-1][1] < 1e-8
    ks = [k for k, _ in rep.residual_history]
    assert ks == sorted(ks)


def test_least_norm_oracle_examples():
    eye = LinearSystem(DenseMatrix(np.eye(3)), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(least_norm_oracle(eye), [1.0, 2.0, 3.0])
    one_row = LinearSystem(DenseMatrix(np.array([[1.0, 1.0]])), np.array([2.0]))
    np.testing.assert_allclose(least_norm_oracle(one_row), [1.0, 1.0])
    stacked = LinearSystem(DenseMatrix(np.vstack([np.eye(2), np.eye(2)])),
                           np.array([1.0, 2.0, 1.0, 2.0]))
    np.testing.assert_allclose(least_norm_oracle(stacked), [1.0, 2.0])


def test_least_norm_oracle_vs_lstsq():
    rng = make_rng(13)
    a = rng.standard_normal((10, 25)) + 1j * rng.standard_normal((10, 25))
    x_star = rng.standard_normal(25)
    sys_ = LinearSystem(DenseMatrix(a), a @ x_star)
    want, *_ = np.linalg.lstsq(a, sys_.b, rcond=None)
    np.testing.assert_allclose(least_norm_oracle(sys_), want, rtol=1e-9, atol=1e-12)


def test_least_norm_oracle_rejects_singular_gram():
    op = DenseMatrix(np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 0.0]]))  # duplicate rows
    with pytest.raises(ValueError, match="singular"):
        least_norm_oracle(LinearSystem(op, np.array([1.0, 1.0])))


def test_theory_factors_identity():
    n = 10
    tf = theory_factors(identity_system(n))
    assert tf["rk_factor"] == pytest.approx(1 - 1 / n)
    assert tf["trk_factor"] == pytest.approx(1 - 2 / n)
    assert tf["gram_lambda_min_nonzero"] == pytest.approx(1.0)
    assert tf["aa_adjoint_frobenius_sq"] == pytest.approx(n)


def test_theory_factors_diag_omega_rho():
    tf = theory_factors(LinearSystem(DenseMatrix(np.diag([1.0, 2.0])), np.ones(2)))
    assert tf["omega"] == pytest.approx(2.0)
    assert tf["rho_max"] == pytest.approx(2.0)


def test_theory_factors_rank_deficient_uses_nonzero_lambda():
    a = make_rng(14).standard_normal((8, 3))
    a[:, 2] = a[:, 0] + a[:, 1]  # column rank 2
    sys_ = LinearSystem(DenseMatrix(a), a @ np.ones(3))
    tf = theory_factors(sys_)
    assert 0.0 <= tf["trk_factor"] < tf["rk_factor"] < 1.0


def test_fit_decay_factor_exact_geometric():
    curve = 3.0 * 0.9 ** np.arange(40)
    assert fit_decay_factor(curve) == pytest.approx(0.9, rel=1e-10)
    with pytest.raises(ValueError):
        fit_decay_factor([1.0])


def test_residual_methods_marker_matches_behavior():
    # maintained-residual methods record a residual sample at every check
    sys_ = gen_gaussian(30, 10, make_rng(15))
    for method in sorted(RESIDUAL_METHODS):
        rep = solve(sys_, SolverConfig(method=method, seed=4, tol=1e-8))
        assert len(rep.residual_history) >= rep.iterations

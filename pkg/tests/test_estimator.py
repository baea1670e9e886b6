import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from kaczmarz2d import KaczmarzSolver, build_blur, image_to_vec, make_rng, phantom


def small_problem(seed=0, m=40, n=10):
    rng = make_rng(seed)
    a = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    return a, x, a @ x


def test_get_set_params_and_clone():
    est = KaczmarzSolver(method="tsrks", tol=1e-9, eta=0.25, seed=11)
    params = est.get_params()
    assert params["method"] == "tsrks" and params["eta"] == 0.25
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(method="GRK")
    assert est.get_params()["method"] == "GRK"


def test_fit_solves_real_system():
    a, x, b = small_problem()
    est = KaczmarzSolver(method="TSRK", tol=1e-12, seed=1).fit(a, b)
    assert est.converged_
    assert est.coef_.dtype.kind == "f"  # real data comes back real
    np.testing.assert_allclose(est.coef_, x, atol=1e-5)
    np.testing.assert_allclose(est.predict(a), b, atol=1e-4)
    assert est.n_iter_ == est.report_.iterations


def test_fit_complex_system():
    rng = make_rng(2)
    a = rng.standard_normal((30, 6)) + 1j * rng.standard_normal((30, 6))
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    est = KaczmarzSolver(method="GRK", tol=1e-12, seed=2).fit(a, a @ x)
    assert est.coef_.dtype.kind == "c"
    np.testing.assert_allclose(est.coef_, x, atol=1e-5)


def test_fit_accepts_sparse_and_operators():
    a, x, b = small_problem(seed=3)
    est = KaczmarzSolver(method="SRK", tol=1e-10, seed=3).fit(sp.csr_matrix(a), b)
    np.testing.assert_allclose(est.coef_, x, atol=1e-4)
    model = build_blur(8, 2, 2, 1.0)
    vec = image_to_vec(phantom(8))
    blurred = model.operator.apply(vec.astype(complex))
    est = KaczmarzSolver(method="TSRK", tol=1e-8, max_iter=20000, seed=4)
    est.fit(model.operator, blurred.real)
    assert est.n_features_in_ == 64
    # the blur factors are near-singular; check relative progress instead of
    # absolute convergence
    assert est.report_.final_residual < 1e-3 * np.linalg.norm(blurred)


def test_relative_error_stop_needs_x_true():
    a, x, b = small_problem(seed=5)
    est = KaczmarzSolver(method="SRK", stop_rule="relative-error", tol=1e-8, seed=5)
    with pytest.raises(ValueError, match="x_star"):
        est.fit(a, b)
    est.fit(a, b, x_true=x)
    assert est.converged_


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        KaczmarzSolver().predict(np.eye(3))


def test_invalid_method_raises_at_fit_not_init():
    est = KaczmarzSolver(method="bogus")  # sklearn contract: no validation in __init__
    a, x, b = small_problem(seed=6)
    with pytest.raises(ValueError, match="unknown method"):
        est.fit(a, b)


def test_predict_checks_width():
    a, x, b = small_problem(seed=7)
    est = KaczmarzSolver(method="K", tol=1e-8, seed=7).fit(a, b)
    with pytest.raises(ValueError, match="columns"):
        est.predict(np.eye(5))


def test_bad_rhs_rejected():
    a, x, b = small_problem(seed=8)
    with pytest.raises(ValueError, match="length"):
        KaczmarzSolver().fit(a, b[:-1])
    b2 = b.copy()
    b2[0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        KaczmarzSolver().fit(a, b2)

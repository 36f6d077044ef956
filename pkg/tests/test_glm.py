import numpy as np
import pytest

from emdlabel.glm import (
    DesignMatrix,
    LambdaPath,
    cross_validate_lambda,
    logistic_gradient,
    logistic_loglik,
    penalized_loglik,
    ridge_least_squares,
    ridge_logistic_fit,
    stratified_folds,
)


def make_design(rng, n=30, p=5, x=None, y=None):
    if x is None:
        x = rng.random((n, p))
    if y is None:
        y = (rng.random(n) < 0.5).astype(float)
        if y.min() == y.max():
            y[0] = 1.0 - y[0]
    n, p = x.shape
    return DesignMatrix(
        x=x,
        y=y,
        real_ids=[f"r{i}" for i in range(n)],
        synthetic_ids=[f"s{j}" for j in range(p)],
    )


def finite_difference_gradient(d, beta0, beta, lam, h=1e-5):
    full = np.concatenate(([beta0], beta))
    grad = np.zeros_like(full)
    for k in range(len(full)):
        plus, minus = full.copy(), full.copy()
        plus[k] += h
        minus[k] -= h
        grad[k] = (
            penalized_loglik(d, plus[0], plus[1:], lam)
            - penalized_loglik(d, minus[0], minus[1:], lam)
        ) / (2 * h)
    return grad


# ---------------------------------------------------------------------------
# design matrix validation
# ---------------------------------------------------------------------------


def test_design_matrix_rejects_bad_inputs():
    ids = ["a", "b"]
    with pytest.raises(ValueError, match="NaN"):
        DesignMatrix(np.array([[np.nan], [1.0]]), np.array([0.0, 1.0]), ids, ["s"])
    with pytest.raises(ValueError, match="nonnegative"):
        DesignMatrix(np.array([[-1.0], [1.0]]), np.array([0.0, 1.0]), ids, ["s"])
    with pytest.raises(ValueError, match="both classes"):
        DesignMatrix(np.array([[1.0], [1.0]]), np.array([1.0, 1.0]), ids, ["s"])
    with pytest.raises(ValueError, match="0/1"):
        DesignMatrix(np.array([[1.0], [1.0]]), np.array([0.0, 2.0]), ids, ["s"])


# ---------------------------------------------------------------------------
# ridge least squares
# ---------------------------------------------------------------------------


def test_ridge_ls_identity_example():
    # hand-checkable 2x2 solve: (I + I)^(-1) [1, 0] = [0.5, 0]
    d = make_design(None, x=np.eye(2), y=np.array([1.0, 0.0]))
    fit = ridge_least_squares(d, 1.0, fit_intercept=False)
    assert fit.coefficients == pytest.approx([0.5, 0.0], abs=1e-12)
    assert fit.kind == "ridge_ls"


def test_ridge_ls_zero_lambda_matches_normal_equations():
    rng = np.random.default_rng(21)
    for _ in range(5):
        d = make_design(rng, n=40, p=4)
        fit = ridge_least_squares(d, 0.0)
        a = np.hstack([np.ones((d.n, 1)), d.x])
        brute = np.linalg.solve(a.T @ a, a.T @ d.y)
        assert fit.intercept == pytest.approx(brute[0], abs=1e-8)
        assert fit.coefficients == pytest.approx(brute[1:], abs=1e-8)


def test_ridge_ls_huge_lambda_collapses_to_null_model():
    rng = np.random.default_rng(22)
    d = make_design(rng, n=25, p=3)
    fit = ridge_least_squares(d, 1e12)
    assert np.all(np.abs(fit.coefficients) < 1e-6)
    assert fit.intercept == pytest.approx(d.y.mean(), abs=1e-6)


def test_ridge_ls_objective_value():
    rng = np.random.default_rng(23)
    d = make_design(rng, n=15, p=2)
    lam = 0.7
    fit = ridge_least_squares(d, lam)
    resid = d.y - fit.intercept - d.x @ fit.coefficients
    expected = resid @ resid + lam * fit.coefficients @ fit.coefficients
    assert fit.objective == pytest.approx(expected, rel=1e-12)


def test_ridge_ls_singular_at_zero_lambda():
    x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # rank 1
    d = make_design(None, x=x, y=np.array([1.0, 0.0, 1.0]))
    with pytest.raises(np.linalg.LinAlgError, match="singular"):
        ridge_least_squares(d, 0.0)
    ridge_least_squares(d, 0.5)  # regularized solve goes through


def test_ridge_ls_negative_lambda_rejected():
    d = make_design(np.random.default_rng(1))
    with pytest.raises(ValueError, match="nonnegative"):
        ridge_least_squares(d, -0.1)


# ---------------------------------------------------------------------------
# logistic likelihood and fit
# ---------------------------------------------------------------------------


def test_loglik_at_zero_parameters():
    rng = np.random.default_rng(24)
    d = make_design(rng, n=17, p=3)
    assert logistic_loglik(d, 0.0, np.zeros(3)) == pytest.approx(-17 * np.log(2), rel=1e-12)


def test_loglik_matches_bernoulli_form():
    rng = np.random.default_rng(25)
    d = make_design(rng, n=12, p=3)
    for _ in range(5):
        beta0 = float(rng.normal())
        beta = rng.normal(size=3)
        eta = beta0 + d.x @ beta
        pi = 1.0 / (1.0 + np.exp(-eta))
        direct = float(np.sum(d.y * np.log(pi) + (1 - d.y) * np.log(1 - pi)))
        assert logistic_loglik(d, beta0, beta) == pytest.approx(direct, abs=1e-12)


def test_loglik_perfect_fit_bound():
    d = make_design(None, x=np.zeros((4, 0)), y=np.array([1.0, 1.0, 1.0, 0.0]))
    d.y = np.ones(4)  # bypass the both-classes check to probe the limit
    values = [logistic_loglik(d, b0, np.zeros(0)) for b0 in (5.0, 20.0, 500.0)]
    assert values[0] < values[1] < values[2] <= 0.0
    assert values[2] == pytest.approx(0.0, abs=1e-12)


def test_intercept_only_logistic_fit():
    y = np.array([1.0] * 3 + [0.0] * 7)
    d = make_design(None, x=np.zeros((10, 0)), y=y)
    fit = ridge_logistic_fit(d, 0.0)
    assert fit.converged
    assert fit.intercept == pytest.approx(np.log(3 / 7), abs=1e-8)


def test_logistic_huge_lambda_collapses_to_null_model():
    rng = np.random.default_rng(26)
    d = make_design(rng, n=30, p=4)
    fit = ridge_logistic_fit(d, 1e12)
    k = d.y.sum()
    assert np.all(np.abs(fit.coefficients) < 1e-6)
    assert fit.intercept == pytest.approx(np.log(k / (d.n - k)), abs=1e-6)


def test_gradient_small_at_solution_and_matches_finite_differences():
    rng = np.random.default_rng(27)
    for lam in (0.05, 1.0, 50.0):
        d = make_design(rng, n=40, p=6)
        fit = ridge_logistic_fit(d, lam)
        assert fit.converged
        grad = logistic_gradient(d, fit.intercept, fit.coefficients, lam)
        assert np.max(np.abs(grad)) < 1e-8
        for _ in range(10):
            beta0 = float(rng.normal(scale=0.5))
            beta = rng.normal(scale=0.5, size=6)
            analytic = logistic_gradient(d, beta0, beta, lam)
            numeric = finite_difference_gradient(d, beta0, beta, lam)
            scale = np.maximum(np.abs(analytic), 1.0)
            assert np.max(np.abs(analytic - numeric) / scale) < 1e-6


def test_objective_path_is_non_decreasing():
    rng = np.random.default_rng(28)
    for _ in range(5):
        d = make_design(rng, n=35, p=5)
        fit = ridge_logistic_fit(d, float(rng.uniform(0.01, 5.0)))
        assert np.all(np.diff(fit.objective_path) >= 0)


def test_penalty_monotonicity():
    rng = np.random.default_rng(29)
    d = make_design(rng, n=40, p=5)
    lams = [0.01, 0.1, 1.0, 10.0, 100.0]
    norms = [
        np.linalg.norm(ridge_logistic_fit(d, lam).coefficients) for lam in lams
    ]
    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))
    ls_norms = [
        np.linalg.norm(ridge_least_squares(d, lam).coefficients) for lam in lams
    ]
    assert all(a >= b - 1e-12 for a, b in zip(ls_norms, ls_norms[1:]))


def test_fit_invariant_under_row_permutation():
    rng = np.random.default_rng(30)
    d = make_design(rng, n=30, p=4)
    perm = rng.permutation(d.n)
    shuffled = DesignMatrix(
        x=d.x[perm],
        y=d.y[perm],
        real_ids=[d.real_ids[i] for i in perm],
        synthetic_ids=d.synthetic_ids,
    )
    for lam in (0.1, 3.0):
        a = ridge_logistic_fit(d, lam)
        b = ridge_logistic_fit(shuffled, lam)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-6)
        assert a.coefficients == pytest.approx(b.coefficients, abs=1e-6)


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


def test_grid_shape_and_single_point():
    rng = np.random.default_rng(31)
    d = make_design(rng, n=24, p=3)
    path = cross_validate_lambda(d, folds=4, grid_size=10, seed=0)
    lam_max = np.max(np.abs(d.x.T @ (d.y - d.y.mean())))
    assert path.grid[0] == pytest.approx(lam_max, rel=1e-12)
    assert path.grid[-1] == pytest.approx(lam_max * 1e-4, rel=1e-9)
    assert np.all(np.diff(path.grid) < 0)
    assert path.chosen in path.grid
    single = cross_validate_lambda(d, folds=4, grid_size=1, seed=0)
    assert single.chosen == single.grid[0]


def test_pure_noise_prefers_heavy_shrinkage():
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        d = make_design(rng, n=40, p=10)
        path = cross_validate_lambda(d, folds=5, grid_size=20, seed=seed)
        rank = int(np.flatnonzero(path.grid == path.chosen)[0])
        if rank < 10:  # descending grid: first half = larger lambda
            hits += 1
    assert hits >= 8


def test_perfect_predictor_prefers_less_shrinkage():
    rng = np.random.default_rng(32)
    n = 200
    y = (rng.random(n) < 0.5).astype(float)
    x = rng.random((n, 4))
    x[:, 0] = 0.05 + 0.9 * y + 0.01 * rng.random(n)  # effectively reveals y
    d = make_design(rng, x=x, y=y)
    path = cross_validate_lambda(d, folds=5, grid_size=20, seed=0)
    assert path.chosen < path.grid[0]


def test_fold_missing_class_raises():
    rng = np.random.default_rng(33)
    x = rng.random((10, 2))
    y = np.array([1.0] + [0.0] * 9)  # class 1 count < folds
    d = make_design(rng, x=x, y=y)
    with pytest.raises(ValueError, match="lost a class"):
        cross_validate_lambda(d, folds=5, grid_size=3, seed=0)


def test_stratified_folds_properties():
    y = np.array([0.0] * 12 + [1.0] * 8)
    folds = stratified_folds(y, 4, seed=0)
    assert sorted(np.concatenate(folds).tolist()) == list(range(20))
    for fold in folds:
        assert np.sum(y[fold] == 0) == 3
        assert np.sum(y[fold] == 1) == 2
    again = stratified_folds(y, 4, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    different = stratified_folds(y, 4, seed=1)
    assert any(not np.array_equal(a, b) for a, b in zip(folds, different))


def test_lambda_path_validation():
    with pytest.raises(ValueError, match="not on the grid"):
        LambdaPath(
            grid=np.array([2.0, 1.0]),
            cv_mean=np.zeros(2),
            cv_se=np.zeros(2),
            chosen=0.5,
        )

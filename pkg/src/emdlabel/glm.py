"""Ridge least squares and ridge logistic regression with CV lambda selection.

The penalty is ``lam * sum(beta_j ** 2)`` with the intercept left
unpenalized, exactly as it appears in the least-squares objective
``sum((y_i - b0 - x_i . beta)^2) + lam * sum(beta_j^2)``; reported lambda
values therefore refer to that parameterization (no 1/2 factor, no 1/n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

GRADIENT_TOL = 1e-8
MAX_ITER = 100
MAX_HALVINGS = 30


@dataclass
class DesignMatrix:
    """n observations of p nonnegative distance features with a 0/1 response."""

    x: np.ndarray
    y: np.ndarray
    real_ids: list[str]
    synthetic_ids: list[str]

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2:
            raise ValueError("x must be a 2-D matrix")
        n, p = self.x.shape
        if self.y.shape != (n,):
            raise ValueError(f"y length {self.y.shape} does not match n={n}")
        if len(self.real_ids) != n or len(self.synthetic_ids) != p:
            raise ValueError("id lists do not match the matrix shape")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("x contains NaN or infinite entries")
        if np.any(self.x < 0):
            raise ValueError("x entries must be nonnegative distances")
        if not np.all(np.isin(self.y, (0.0, 1.0))):
            raise ValueError("y must be 0/1")
        if not (np.any(self.y == 0) and np.any(self.y == 1)):
            raise ValueError("y must contain both classes")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, rows) -> "DesignMatrix":
        rows = np.asarray(rows)
        return DesignMatrix(
            x=self.x[rows],
            y=self.y[rows],
            real_ids=[self.real_ids[i] for i in rows],
            synthetic_ids=self.synthetic_ids,
        )


@dataclass
class RidgeFit:
    """Fitted intercept and coefficients plus convergence diagnostics."""

    intercept: float
    coefficients: np.ndarray
    lam: float
    converged: bool
    iterations: int
    final_gradient_norm: float
    objective: float
    kind: str = "ridge_logistic"
    objective_path: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not np.isfinite(self.objective):
            raise ValueError("fit objective is not finite")
        if self.converged and self.final_gradient_norm >= GRADIENT_TOL:
            raise ValueError("converged flag inconsistent with gradient norm")

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return expit(self.intercept + np.asarray(x, float) @ self.coefficients)


@dataclass
class LambdaPath:
    """Descending lambda grid with per-lambda CV deviance mean and SE."""

    grid: np.ndarray
    cv_mean: np.ndarray
    cv_se: np.ndarray
    chosen: float

    def __post_init__(self):
        if len(self.cv_mean) != len(self.grid) or len(self.cv_se) != len(self.grid):
            raise ValueError("cv score arrays must match the grid length")
        if np.any(np.diff(self.grid) >= 0):
            raise ValueError("lambda grid must be strictly descending")
        if self.chosen not in self.grid:
            raise ValueError("chosen lambda is not on the grid")


def ridge_least_squares(d: DesignMatrix, lam: float, fit_intercept: bool = True) -> RidgeFit:
    """Closed-form ridge solution of the penalized normal equations.

    Features are centered so the intercept stays unpenalized; it is
    recovered as ``mean(y) - mean(x) . beta``. With ``lam == 0`` the
    centered matrix must have full column rank.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    x, y = d.x, d.y
    n, p = x.shape
    if fit_intercept:
        x_mean = x.mean(axis=0)
        y_mean = y.mean()
        xc = x - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(p)
        y_mean = 0.0
        xc, yc = x, y
    if lam == 0 and p > 0 and np.linalg.matrix_rank(xc) < p:
        raise np.linalg.LinAlgError(
            "singular system: rank-deficient features at lambda=0"
        )
    gram = xc.T @ xc + lam * np.eye(p)
    beta = np.linalg.solve(gram, xc.T @ yc) if p > 0 else np.zeros(0)
    intercept = float(y_mean - x_mean @ beta) if fit_intercept else 0.0
    resid = y - intercept - x @ beta
    objective = float(resid @ resid + lam * beta @ beta)
    grad_norm = float(np.max(np.abs(-2.0 * xc.T @ (yc - xc @ beta) + 2.0 * lam * beta), initial=0.0))
    return RidgeFit(
        intercept=intercept,
        coefficients=beta,
        lam=float(lam),
        converged=True,
        iterations=0,
        final_gradient_norm=grad_norm,
        objective=objective,
        kind="ridge_ls",
    )


def logistic_loglik(d: DesignMatrix, beta0: float, beta: np.ndarray) -> float:
    """Bernoulli log-likelihood sum(y * eta - log(1 + exp(eta))), overflow-safe."""
    eta = beta0 + d.x @ np.asarray(beta, float)
    return float(np.sum(d.y * eta - np.logaddexp(0.0, eta)))


def penalized_loglik(d: DesignMatrix, beta0: float, beta: np.ndarray, lam: float) -> float:
    beta = np.asarray(beta, float)
    return logistic_loglik(d, beta0, beta) - lam * float(beta @ beta)


def logistic_gradient(d: DesignMatrix, beta0: float, beta: np.ndarray, lam: float) -> np.ndarray:
    """Gradient of the penalized log-likelihood, intercept coordinate first."""
    beta = np.asarray(beta, float)
    eta = beta0 + d.x @ beta
    resid = d.y - expit(eta)
    return np.concatenate(([resid.sum()], d.x.T @ resid - 2.0 * lam * beta))


def ridge_logistic_fit(
    d: DesignMatrix,
    lam: float,
    tol: float = GRADIENT_TOL,
    max_iter: int = MAX_ITER,
) -> RidgeFit:
    """Maximize the ridge-penalized log-likelihood by Newton steps (IRLS).

    Each step solves the weighted least-squares system with the penalty
    added to every coordinate except the intercept, halving the step until
    the objective is non-decreasing. Stops when the gradient infinity-norm
    drops below ``tol`` or after ``max_iter`` iterations; the returned fit
    records convergence, the final gradient norm, and the objective path.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    x, y = d.x, d.y
    n, p = x.shape
    a = np.hstack([np.ones((n, 1)), x])
    pen = np.ones(p + 1)
    pen[0] = 0.0
    b = np.zeros(p + 1)

    def objective(coefs):
        eta = a @ coefs
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - lam * np.sum(pen * coefs**2))

    def gradient(coefs):
        resid = y - expit(a @ coefs)
        return a.T @ resid - 2.0 * lam * pen * coefs

    obj = objective(b)
    path = [obj]
    converged = False
    iterations = 0
    grad_norm = float(np.max(np.abs(gradient(b))))
    while iterations < max_iter:
        if grad_norm < tol:
            converged = True
            break
        pi = expit(a @ b)
        w = pi * (1.0 - pi)
        hess = (a.T * w) @ a + 2.0 * lam * np.diag(pen)
        try:
            delta = np.linalg.solve(hess, gradient(b))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "singular Newton system; data may be separable at lambda=0"
            ) from exc
        step = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            candidate = b + step * delta
            cand_obj = objective(candidate)
            if cand_obj >= obj:
                b, obj, accepted = candidate, cand_obj, True
                break
            step *= 0.5
        if not accepted:
            break  # stalled: no step keeps the objective non-decreasing
        iterations += 1
        path.append(obj)
        grad_norm = float(np.max(np.abs(gradient(b))))
    else:
        converged = grad_norm < tol

    return RidgeFit(
        intercept=float(b[0]),
        coefficients=b[1:].copy(),
        lam=float(lam),
        converged=converged,
        iterations=iterations,
        final_gradient_norm=grad_norm,
        objective=obj,
        kind="ridge_logistic",
        objective_path=np.array(path),
    )


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Deal each class round-robin into ``folds`` after a seeded shuffle."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    y = np.asarray(y)
    if len(y) < folds:
        raise ValueError(f"need at least {folds} observations for {folds} folds")
    rng = np.random.default_rng(seed)
    assignment = np.zeros(len(y), dtype=int)
    offset = 0  # continue the deal across classes so no fold ends up empty
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        assignment[idx] = (offset + np.arange(len(idx))) % folds
        offset += len(idx)
    return [np.flatnonzero(assignment == k) for k in range(folds)]


def _mean_deviance(fit: RidgeFit, x: np.ndarray, y: np.ndarray, kind: str) -> float:
    if kind == "ridge_logistic":
        eta = fit.intercept + x @ fit.coefficients
        return float(np.mean(-2.0 * (y * eta - np.logaddexp(0.0, eta))))
    resid = y - fit.intercept - x @ fit.coefficients
    return float(np.mean(resid**2))


def cross_validate_lambda(
    d: DesignMatrix,
    folds: int = 5,
    grid_size: int = 50,
    seed: int = 0,
    kind: str = "ridge_logistic",
) -> LambdaPath:
    """Pick lambda by stratified K-fold CV over a log-spaced descending grid.

    The grid spans ``[lam_max * 1e-4, lam_max]`` with
    ``lam_max = max_j |x_j . (y - mean(y))|``; the winner minimizes the mean
    validation deviance, ties resolved toward more shrinkage (larger
    lambda). Raises if any training fold ends up single-class, which can
    only happen when a class has fewer members than folds.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    if kind not in ("ridge_logistic", "ridge_ls"):
        raise ValueError(f"unknown model kind {kind!r}")
    lam_max = float(np.max(np.abs(d.x.T @ (d.y - d.y.mean())), initial=0.0))
    lam_max = max(lam_max, 1e-12)
    grid = np.geomspace(lam_max, lam_max * 1e-4, grid_size)

    fold_indices = stratified_folds(d.y, folds, seed)
    all_rows = np.arange(d.n)
    deviances = np.zeros((folds, grid_size))
    for k, val_rows in enumerate(fold_indices):
        train_rows = np.setdiff1d(all_rows, val_rows)
        y_train = d.y[train_rows]
        if not (np.any(y_train == 0) and np.any(y_train == 1)):
            raise ValueError(f"training fold {k} lost a class; reduce folds")
        train = d.subset(train_rows)
        x_val, y_val = d.x[val_rows], d.y[val_rows]
        for g, lam in enumerate(grid):
            if kind == "ridge_logistic":
                fit = ridge_logistic_fit(train, lam)
            else:
                fit = ridge_least_squares(train, lam)
            deviances[k, g] = _mean_deviance(fit, x_val, y_val, kind)

    cv_mean = deviances.mean(axis=0)
    cv_se = deviances.std(axis=0, ddof=1) / np.sqrt(folds)
    chosen = float(grid[int(np.argmin(cv_mean))])  # first min = largest lambda
    return LambdaPath(grid=grid, cv_mean=cv_mean, cv_se=cv_se, chosen=chosen)

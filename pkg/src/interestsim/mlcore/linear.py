"""L1-regularized linear and logistic models via coordinate descent.

Features are standardized internally (parameters stored with the model)
and categorical columns are one-hot encoded over their most frequent
levels.  The penalized objective is (1/n)-scaled loss + lambda * ||w||_1
with an unpenalized intercept; the logistic case wraps the same
coordinate sweep in an iteratively reweighted quadratic approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DesignMatrix


class ConvergenceError(Exception):
    """Raised when coordinate descent exhausts its budget; carries the
    last iterate in ``.model``."""

    def __init__(self, message: str, model: "LinearModel"):
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class CategoricalEncoder:
    columns: tuple[int, ...]
    levels: tuple[tuple[float, ...], ...]  # per column, values kept as indicators

    def width(self, n_raw: int) -> int:
        return n_raw - len(self.columns) + sum(len(lv) for lv in self.levels)

    def transform(self, X: np.ndarray) -> np.ndarray:
        if not self.columns:
            return np.asarray(X, dtype=np.float64)
        X = np.asarray(X, dtype=np.float64)
        blocks = []
        cat = set(self.columns)
        numeric = [j for j in range(X.shape[1]) if j not in cat]
        if numeric:
            blocks.append(X[:, numeric])
        for j, lv in zip(self.columns, self.levels):
            col = X[:, j]
            blocks.append((col[:, None] == np.asarray(lv)[None, :]).astype(np.float64))
        return np.hstack(blocks)

    def names(self, raw_names: tuple[str, ...]) -> tuple[str, ...]:
        if not self.columns:
            return tuple(raw_names)
        cat = set(self.columns)
        out = [raw_names[j] for j in range(len(raw_names)) if j not in cat]
        for j, lv in zip(self.columns, self.levels):
            out.extend(f"{raw_names[j]}={v:g}" for v in lv)
        return tuple(out)


def fit_encoder(X: np.ndarray, categorical: tuple[int, ...], max_levels: int = 20) -> CategoricalEncoder:
    """Keep the ``max_levels`` most frequent values per categorical column
    (ties to the smaller value); unseen or rare values encode as all-zero."""
    levels = []
    for j in categorical:
        vals, counts = np.unique(X[:, j], return_counts=True)
        order = np.lexsort((vals, -counts))
        kept = np.sort(vals[order[:max_levels]])
        levels.append(tuple(float(v) for v in kept))
    return CategoricalEncoder(tuple(categorical), tuple(levels))


@dataclass
class LinearModel:
    link: str  # "identity" or "logistic"
    l1_lambda: float
    weights: np.ndarray  # on the standardized scale
    intercept: float
    mu: np.ndarray
    sigma: np.ndarray
    encoder: CategoricalEncoder
    feature_names: tuple[str, ...]
    n_raw_features: int
    converged: bool = True
    n_sweeps: int = 0

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_raw_features:
            raise ValueError(
                f"expected {self.n_raw_features} feature columns, got shape {X.shape}"
            )
        Z = (self.encoder.transform(X) - self.mu) / self.sigma
        return Z @ self.weights + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        z = self.decision_function(X)
        if self.link == "logistic":
            return sigmoid(z)
        return z

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.weights))


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(weights: np.ndarray, intercept: float, X: np.ndarray, y: np.ndarray):
    """Mean negative log-likelihood and its gradient (weights, intercept)."""
    z = X @ weights + intercept
    # log(1 + e^z) - y*z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = sigmoid(z)
    grad_w = X.T @ (p - y) / len(y)
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _cd_sweeps(Z, y, w, b, lam, omega, max_sweeps, tol):
    """Cyclic coordinate descent on (1/2n) sum omega*(y - Zw - b)^2 + lam*||w||_1.

    Alternates full sweeps with sweeps over the active (nonzero) set and
    declares convergence only when a full sweep moves every coefficient
    by less than tol.  Mutates w; returns (intercept, sweeps, converged).
    """
    n = len(y)
    if omega is None:
        col_ss = np.einsum("ij,ij->j", Z, Z) / n
        wsum = float(n)
    else:
        col_ss = np.einsum("i,ij,ij->j", omega, Z, Z) / n
        wsum = float(omega.sum())
    r = y - Z @ w - b
    p = Z.shape[1]
    full = True
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        cols = range(p) if full else np.nonzero(w)[0]
        delta_max = 0.0
        for j in cols:
            if col_ss[j] <= 0:
                continue
            zj = Z[:, j]
            wj = w[j]
            if omega is None:
                rho = float(zj @ r) / n + col_ss[j] * wj
            else:
                rho = float(zj @ (omega * r)) / n + col_ss[j] * wj
            new = _soft(rho, lam) / col_ss[j]
            if new != wj:
                r -= (new - wj) * zj
                w[j] = new
                delta = abs(new - wj)
                if delta > delta_max:
                    delta_max = delta
        if omega is None:
            db = float(r.sum()) / n
        else:
            db = float((omega * r).sum()) / wsum
        if db != 0.0:
            b += db
            r -= db
            if abs(db) > delta_max:
                delta_max = abs(db)
        if delta_max < tol:
            if full:
                return b, sweeps, True
            full = True  # verify on a full sweep
        else:
            full = False
    return b, sweeps, False


def fit_linear(
    data: DesignMatrix,
    link: str = "identity",
    l1_lambda: float = 0.0,
    max_iter: int = 1000,
    tol: float = 1e-8,
    max_levels: int = 20,
    warm_start: LinearModel | None = None,
) -> LinearModel:
    """Coordinate-descent fit; raises ConvergenceError (carrying the last
    iterate) if the sweep budget runs out."""
    if link not in ("identity", "logistic"):
        raise ValueError(f"link must be 'identity' or 'logistic', got {link!r}")
    if l1_lambda < 0:
        raise ValueError("l1_lambda must be >= 0")
    if link == "logistic":
        labels = np.unique(data.y)
        if not np.all(np.isin(labels, (0.0, 1.0))):
            raise ValueError("logistic link requires binary 0/1 targets")
    encoder = (
        warm_start.encoder
        if warm_start is not None
        else fit_encoder(data.X, data.categorical, max_levels)
    )
    Z_raw = encoder.transform(data.X)
    if warm_start is not None:
        mu, sigma = warm_start.mu, warm_start.sigma
    else:
        mu = Z_raw.mean(axis=0)
        sigma = Z_raw.std(axis=0)
        sigma = np.where(sigma > 0, sigma, 1.0)
    Z = np.asfortranarray((Z_raw - mu) / sigma)
    y = data.y
    w = warm_start.weights.copy() if warm_start is not None else np.zeros(Z.shape[1])
    b = warm_start.intercept if warm_start is not None else 0.0

    names = encoder.names(data.names if data.names else tuple(f"x{j}" for j in range(data.n_cols)))
    used = 0
    if link == "identity":
        b, used, converged = _cd_sweeps(Z, y, w, b, l1_lambda, None, max_iter, tol)
    else:
        converged = False
        for _ in range(max_iter):
            z = Z @ w + b
            p = sigmoid(z)
            omega = np.maximum(p * (1.0 - p), 1e-6)
            y_work = z + (y - p) / omega
            w_before = w.copy()
            b_before = b
            inner_budget = max(max_iter - used, 1)
            b, sweeps, _ = _cd_sweeps(Z, y_work, w, b, l1_lambda, omega, min(inner_budget, 100), tol)
            used += sweeps
            delta = max(float(np.max(np.abs(w - w_before))) if len(w) else 0.0, abs(b - b_before))
            if delta < tol:
                converged = True
                break
            if used >= max_iter:
                break
    model = LinearModel(
        link=link,
        l1_lambda=l1_lambda,
        weights=w,
        intercept=float(b),
        mu=mu,
        sigma=sigma,
        encoder=encoder,
        feature_names=names,
        n_raw_features=data.n_cols,
        converged=bool(converged),
        n_sweeps=used,
    )
    if not converged:
        raise ConvergenceError(
            f"coordinate descent did not converge within {max_iter} sweeps", model
        )
    return model


def lambda_max(data: DesignMatrix, link: str = "identity", max_levels: int = 20) -> float:
    """Smallest lambda that forces all weights to zero."""
    encoder = fit_encoder(data.X, data.categorical, max_levels)
    Z = encoder.transform(data.X)
    mu = Z.mean(axis=0)
    sigma = Z.std(axis=0)
    sigma = np.where(sigma > 0, sigma, 1.0)
    Z = (Z - mu) / sigma
    y = data.y
    # at the all-zero solution the fitted mean equals mean(y) for both links
    resid = y - y.mean()
    return float(np.max(np.abs(Z.T @ resid)) / len(y))


def default_lambda_grid(data: DesignMatrix, link: str, n_points: int = 5, max_levels: int = 20):
    lmax = lambda_max(data, link, max_levels)
    if lmax <= 0:
        return [0.0]
    return list(lmax * np.logspace(-0.5, -3.0, n_points))


def _kfold_indices(n: int, folds: int, seed: int):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    bounds = np.linspace(0, n, folds + 1).astype(int)
    for f in range(folds):
        val = perm[bounds[f] : bounds[f + 1]]
        train = np.concatenate([perm[: bounds[f]], perm[bounds[f + 1] :]])
        yield train, val


def cv_loss(pred: np.ndarray, y: np.ndarray, link: str) -> float:
    if link == "logistic":
        p = np.clip(pred, 1e-12, 1 - 1e-12)
        return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    return float(np.mean((pred - y) ** 2))


def fit_linear_cv(
    data: DesignMatrix,
    link: str,
    lambdas=None,
    folds: int = 10,
    seed: int = 0,
    max_iter: int = 2000,
    tol: float = 1e-6,
    max_levels: int = 20,
):
    """Pick lambda by k-fold CV (warm-started along the descending grid),
    then refit on all rows.  Returns (model, {lambda: mean CV loss})."""
    if lambdas is None:
        lambdas = default_lambda_grid(data, link, max_levels=max_levels)
    grid = sorted(set(float(l) for l in lambdas), reverse=True)
    folds = max(2, min(folds, data.n_rows))
    totals = {lam: 0.0 for lam in grid}
    cv_tol = max(tol, 1e-5)  # selection does not need final-fit precision
    for train_idx, val_idx in _kfold_indices(data.n_rows, folds, seed):
        train = data.take(train_idx)
        Xv = data.X[val_idx]
        yv = data.y[val_idx]
        warm = None
        for lam in grid:
            try:
                model = fit_linear(train, link, lam, max_iter, cv_tol, max_levels, warm_start=warm)
            except ConvergenceError as err:
                model = err.model
            warm = model
            totals[lam] += cv_loss(model.predict(Xv), yv, link) * len(val_idx)
    # minimize CV loss; ties prefer the larger lambda (sparser model)
    best = grid[0]
    for lam in grid:
        if totals[lam] < totals[best] - 1e-12:
            best = lam
    model = fit_linear(data, link, best, max_iter, tol, max_levels)
    cv_table = {lam: totals[lam] / data.n_rows for lam in grid}
    return model, cv_table

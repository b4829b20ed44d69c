import numpy as np
import pytest

from interestsim.mlcore import (
    ConvergenceError,
    DesignMatrix,
    fit_linear,
    fit_linear_cv,
    logistic_loss,
    sigmoid,
)


def dm(X, y, categorical=()):
    return DesignMatrix(np.asarray(X, dtype=float), np.asarray(y, dtype=float), categorical)


def random_regression(seed, n=120, p=6, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta = rng.normal(size=p)
    y = X @ beta + noise * rng.normal(size=n)
    return X, y


def test_huge_lambda_shrinks_everything():
    X, y = random_regression(0)
    model = fit_linear(dm(X, y), "identity", l1_lambda=1e6)
    assert np.all(model.weights == 0.0)
    assert model.intercept == pytest.approx(y.mean())
    yb = (y > np.median(y)).astype(float)
    model = fit_linear(dm(X, yb), "logistic", l1_lambda=1e6)
    assert np.all(model.weights == 0.0)
    assert sigmoid(np.array([model.intercept]))[0] == pytest.approx(yb.mean(), abs=1e-6)


def test_lambda_zero_matches_normal_equations():
    X, y = random_regression(1)
    model = fit_linear(dm(X, y), "identity", l1_lambda=0.0, tol=1e-12, max_iter=5000)
    Xa = np.hstack([X, np.ones((len(y), 1))])
    beta, *_ = np.linalg.lstsq(Xa, y, rcond=None)
    pred_direct = Xa @ beta
    assert np.max(np.abs(model.predict(X) - pred_direct)) < 1e-6


def test_one_dimensional_soft_threshold_closed_form():
    rng = np.random.default_rng(2)
    x = rng.normal(size=200)
    x = (x - x.mean()) / x.std()  # orthonormalized: mean 0, (1/n)sum x^2 = 1
    y = 0.8 * x + 0.05 * rng.normal(size=200)
    y = y - y.mean()
    beta_ols = float(x @ y) / len(y)
    for lam in [0.0, 0.1, 0.3, abs(beta_ols) + 0.2]:
        model = fit_linear(dm(x[:, None], y), "identity", l1_lambda=lam, tol=1e-12, max_iter=5000)
        expected = np.sign(beta_ols) * max(abs(beta_ols) - lam, 0.0)
        assert model.weights[0] == pytest.approx(expected, abs=1e-9)


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(30):
        n, p = 40, 4
        X = rng.normal(size=(n, p))
        y = (rng.random(n) < 0.5).astype(float)
        w = rng.normal(size=p)
        b = float(rng.normal())
        _, grad_w, grad_b = logistic_loss(w, b, X, y)
        eps = 1e-6
        for j in range(p):
            wp = w.copy(); wp[j] += eps
            wm = w.copy(); wm[j] -= eps
            num = (logistic_loss(wp, b, X, y)[0] - logistic_loss(wm, b, X, y)[0]) / (2 * eps)
            rel = abs(num - grad_w[j]) / max(abs(num), 1e-12)
            worst = max(worst, rel)
        num_b = (logistic_loss(w, b + eps, X, y)[0] - logistic_loss(w, b - eps, X, y)[0]) / (2 * eps)
        worst = max(worst, abs(num_b - grad_b) / max(abs(num_b), 1e-12))
    assert worst < 1e-5


def test_monotone_sparsity_along_lambda_grid():
    X, y = random_regression(4, n=200, p=12, noise=0.3)
    grid = np.logspace(-3, 0.3, 8)
    counts = []
    for lam in grid:
        model = fit_linear(dm(X, y), "identity", l1_lambda=float(lam), tol=1e-10, max_iter=5000)
        counts.append(model.nonzero_count)
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_convergence_error_carries_last_iterate():
    X, y = random_regression(5)
    with pytest.raises(ConvergenceError) as exc:
        fit_linear(dm(X, y), "identity", l1_lambda=0.0, max_iter=1, tol=1e-15)
    model = exc.value.model
    assert model.weights.shape == (6,)
    assert model.converged is False


def test_logistic_predictions_in_unit_interval():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(150, 5))
    y = (X[:, 0] + 0.3 * rng.normal(size=150) > 0).astype(float)
    model = fit_linear(dm(X, y), "logistic", l1_lambda=0.01)
    p = model.predict(X)
    assert np.all((p > 0) & (p < 1))
    # the informative feature carries the largest weight
    assert np.argmax(np.abs(model.weights)) == 0


def test_categorical_one_hot_expansion():
    rng = np.random.default_rng(7)
    cat = rng.integers(0, 3, size=300).astype(float)
    offsets = np.array([0.0, 1.0, -1.0])
    y = offsets[cat.astype(int)] + 0.01 * rng.normal(size=300)
    X = np.column_stack([cat, rng.normal(size=300)])
    model = fit_linear(dm(X, y, categorical=(0,)), "identity", l1_lambda=0.0, tol=1e-12, max_iter=5000)
    assert len(model.weights) == 3 + 1  # one-hot block + numeric column
    pred = model.predict(X)
    assert np.max(np.abs(pred - y)) < 0.1
    assert model.feature_names[-3:] == ("x0=0", "x0=1", "x0=2")


def test_rare_levels_capped_by_max_levels():
    rng = np.random.default_rng(8)
    cat = np.concatenate([np.zeros(50), np.ones(50), np.arange(2, 32)]).astype(float)
    y = rng.normal(size=len(cat))
    X = cat[:, None]
    model = fit_linear(dm(X, y, categorical=(0,)), "identity", l1_lambda=0.1, max_levels=2)
    assert len(model.weights) == 2
    assert model.encoder.levels[0] == (0.0, 1.0)


def test_cv_selects_reasonable_lambda():
    X, y = random_regression(9, n=240, p=10, noise=0.5)
    model, table = fit_linear_cv(dm(X, y), "identity", folds=5, seed=0)
    assert model.l1_lambda in table
    assert min(table.values()) == table[model.l1_lambda] or (
        table[model.l1_lambda] <= min(table.values()) + 1e-12
    )


def test_cv_single_lambda_grid():
    X, y = random_regression(10)
    model, table = fit_linear_cv(dm(X, y), "identity", lambdas=[0.05], folds=3, seed=0)
    assert model.l1_lambda == 0.05
    assert list(table) == [0.05]

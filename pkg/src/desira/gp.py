"""Gaussian-process regression with a constant-times-Matern(5/2) kernel.

Hyperparameters (amplitude and a single isotropic length scale) are chosen by
maximizing the log marginal likelihood with Nelder-Mead in log space, restarted
from log-uniform draws inside the bounds. Targets are standardized before
fitting and predictions are mapped back to the original scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import ndtr

from desira.errors import FitError, ShapeError
from desira.optim_nm import NMOptions, nelder_mead

SQRT5 = np.sqrt(5.0)
JITTER_START = 1e-10
JITTER_MAX = 1e-4
_HYPER_NM = NMOptions(max_iter=200, x_tol=1e-4, f_tol=1e-7)


@dataclass(frozen=True)
class KernelConfig:
    """Amplitude and length scale of ``constant * Matern(nu=5/2)``, each with bounds."""

    constant_value: float = 1.0
    constant_bounds: tuple[float, float] = (1e-2, 1e12)
    length_scale: float = 1.0
    length_scale_bounds: tuple[float, float] = (1e-4, 1e2)

    def __post_init__(self):
        for name in ("constant", "length_scale"):
            value = self.constant_value if name == "constant" else self.length_scale
            lo, hi = getattr(self, f"{name}_bounds")
            if not (0 < lo < hi):
                raise ValueError(f"{name} bounds must satisfy 0 < low < high")
            if not (lo <= value <= hi):
                raise ValueError(f"{name} value {value} outside its bounds")

    @property
    def log_bounds(self) -> np.ndarray:
        return np.log([self.constant_bounds, self.length_scale_bounds])

    def theta(self) -> np.ndarray:
        return np.log([self.constant_value, self.length_scale])

    def with_theta(self, theta) -> "KernelConfig":
        lb = self.log_bounds
        c, ls = np.exp(np.clip(theta, lb[:, 0], lb[:, 1]))
        c = float(np.clip(c, *self.constant_bounds))
        ls = float(np.clip(ls, *self.length_scale_bounds))
        return replace(self, constant_value=c, length_scale=ls)

    def __call__(self, A, B) -> np.ndarray:
        r = cdist(A, B) / self.length_scale
        return self.constant_value * matern52(r)


def matern52(r: np.ndarray) -> np.ndarray:
    """Matern correlation with smoothness 5/2 at scaled distance ``r``."""
    s = SQRT5 * r
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def _cholesky(K: np.ndarray, jitter: float = JITTER_START) -> tuple[np.ndarray, float]:
    """Cholesky factor of ``K + jitter*I``, escalating jitter x10 up to ``JITTER_MAX``."""
    n = K.shape[0]
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(K + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FitError("covariance matrix is not positive definite even after jitter escalation")


@dataclass
class GPModel:
    X_train: np.ndarray
    y_train: np.ndarray
    kernel: KernelConfig
    jitter: float
    L: np.ndarray
    alpha: np.ndarray
    y_mean: float
    y_std: float
    log_marginal_likelihood: float

    @property
    def k(self) -> int:
        return self.X_train.shape[1]


def log_marginal_likelihood(theta, X: np.ndarray, z: np.ndarray, kernel: KernelConfig) -> float:
    """Log marginal likelihood of standardized targets ``z`` at log-hyperparameters ``theta``."""
    K = kernel.with_theta(theta)(X, X)
    L, _ = _cholesky(K)
    a = cho_solve((L, True), z)
    n = z.size
    return float(-0.5 * z @ a - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2 * np.pi))


def gp_fit(
    X,
    y,
    kernel: KernelConfig | None = None,
    n_restarts: int = 0,
    seed: int | np.random.Generator | None = None,
) -> GPModel:
    """Fit hyperparameters by maximum marginal likelihood and factorize the covariance.

    The best of ``1 + n_restarts`` local searches is kept: one started from the
    kernel's initial values, the rest from log-uniform draws within the bounds.
    Duplicate inputs are tolerated through jitter escalation; a fit that stays
    indefinite raises :class:`FitError`.
    """
    kernel = kernel or KernelConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.size} values")
    if y.size < 1:
        raise FitError("need at least one training point")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise FitError("training data must be finite")

    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0
    z = (y - y_mean) / y_std

    def neg_lml(theta):
        try:
            return -log_marginal_likelihood(theta, X, z, kernel)
        except FitError:
            return 1e25

    rng = np.random.default_rng(seed)
    lb = kernel.log_bounds
    starts = [kernel.theta()]
    starts += list(rng.uniform(lb[:, 0], lb[:, 1], size=(n_restarts, 2)))
    best_theta, best_val = None, np.inf
    for theta0 in starts:
        run = nelder_mead(neg_lml, theta0, _HYPER_NM)
        theta = np.clip(run.x_best, lb[:, 0], lb[:, 1])
        if run.f_best < best_val:
            best_theta, best_val = theta, run.f_best
    if best_val >= 1e25:
        raise FitError("no hyperparameter setting gave a positive definite covariance")

    fitted = kernel.with_theta(best_theta)
    L, jitter = _cholesky(fitted(X, X))
    alpha = cho_solve((L, True), z)
    return GPModel(X, y, fitted, jitter, L, alpha, y_mean, y_std, -best_val)


def gp_predict(model: GPModel, X_query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation at each query row."""
    Xq = np.atleast_2d(np.asarray(X_query, dtype=float))
    if Xq.shape[1] != model.k:
        raise ShapeError(f"expected {model.k} columns, got {Xq.shape[1]}")
    Ks = model.kernel(Xq, model.X_train)
    mean = Ks @ model.alpha
    v = solve_triangular(model.L, Ks.T, lower=True)
    var = model.kernel.constant_value - np.sum(v * v, axis=0)
    std = np.sqrt(np.maximum(var, 0.0))
    return model.y_mean + model.y_std * mean, model.y_std * std


def ei_from_moments(mu, sigma, best_y) -> np.ndarray:
    """Expected improvement below ``best_y`` for a normal prediction ``N(mu, sigma^2)``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    diff = best_y - mu
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(sigma > 0, diff / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = diff * ndtr(z) + sigma * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    ei = np.where(sigma > 0, ei, np.maximum(diff, 0.0))
    return np.maximum(ei, 0.0)


def expected_improvement(model: GPModel, X, best_y: float) -> np.ndarray:
    mu, sigma = gp_predict(model, X)
    return ei_from_moments(mu, sigma, best_y)

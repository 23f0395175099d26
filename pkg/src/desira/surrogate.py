"""Surrogate-model based minimization of scalarized multi-objective functions.

The objective maps an ``(n, k)`` matrix of points to an ``(n, m)`` matrix of
raw outcomes. A ``mo2so`` hook turns the whole outcome history into one scalar
per row (weighted sum, ``1 - overall desirability``, ...); a Gaussian process
is fitted to those scalars and the next point maximizes expected improvement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from desira.desirability import DOverall
from desira.errors import InvalidInputError, ShapeError
from desira.gp import KernelConfig, GPModel, ei_from_moments, gp_fit, gp_predict
from desira.optim_nm import NMOptions, nelder_mead
from desira.result import RunResult

logger = logging.getLogger(__name__)

INFILL_CRITERIA = ("expected_improvement", "posterior_mean")
_REFINE_NM = NMOptions(max_iter=100, x_tol=1e-6, f_tol=1e-12)


def _as_bounds(bounds) -> np.ndarray:
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2:
        raise ShapeError("bounds must be a sequence of (low, high) pairs")
    if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
        raise InvalidInputError("bounds must be finite with low < high")
    return b


def lhs_sample(n: int, bounds, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Latin hypercube sample of ``n`` points inside ``bounds``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    b = _as_bounds(bounds)
    sampler = qmc.LatinHypercube(d=b.shape[0], seed=np.random.default_rng(seed))
    return qmc.scale(sampler.random(n), b[:, 0], b[:, 1])


def aggregate_weighted(Y, weights) -> np.ndarray:
    """Row-wise weighted sum of the objective columns."""
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if Y.size == 0:
        return np.empty(0)
    Y = np.atleast_2d(Y)
    if w.shape != (Y.shape[1],):
        raise ShapeError(f"need {Y.shape[1]} weights, got {w.size}")
    return Y @ w


def weighted_mo2so(weights) -> Callable[[np.ndarray], np.ndarray]:
    w = np.asarray(weights, dtype=float)
    return lambda Y: aggregate_weighted(Y, w)


def desirability_mo2so(Y, overall: DOverall) -> np.ndarray:
    """``1 - D`` for each row, so that minimizing maximizes overall desirability."""
    Y = np.asarray(Y, dtype=float)
    if Y.size == 0:
        return np.empty(0)
    Y = np.atleast_2d(Y)
    if Y.shape[1] != len(overall):
        raise ShapeError(f"expected {len(overall)} objective columns, got {Y.shape[1]}")
    return 1.0 - overall.predict(Y)


def desirability_hook(overall: DOverall) -> Callable[[np.ndarray], np.ndarray]:
    return lambda Y: desirability_mo2so(Y, overall)


def first_objective(Y: np.ndarray) -> np.ndarray:
    """Default scalarization: keep the first column."""
    return np.asarray(Y, dtype=float)[:, 0]


@dataclass
class SboConfig:
    """Settings of :func:`sbo_minimize`.

    ``max_iter`` is the total evaluation budget including the ``n_initial``
    Latin hypercube points. ``on_error`` is ``"worst"`` (a failing point gets
    the worst scalar value seen so far) or ``"raise"``.
    """

    bounds: Sequence[Sequence[float]]
    seed: int
    n_initial: int = 15
    max_iter: int = 50
    max_surrogate_points: int = 30
    mo2so: Callable[[np.ndarray], np.ndarray] | None = None
    infill: str = "expected_improvement"
    kernel: KernelConfig = field(default_factory=KernelConfig)
    gp_restarts: int = 10
    n_candidates: int = 256
    n_refine: int = 4
    on_error: str = "worst"

    def __post_init__(self):
        self.bounds = _as_bounds(self.bounds)
        if self.n_initial < 2:
            raise InvalidInputError("n_initial must be >= 2")
        if self.max_iter < self.n_initial:
            raise InvalidInputError("max_iter must be >= n_initial")
        if self.max_surrogate_points < 2:
            raise InvalidInputError("max_surrogate_points must be >= 2")
        if self.infill not in INFILL_CRITERIA:
            raise InvalidInputError(f"infill must be one of {INFILL_CRITERIA}")
        if self.on_error not in ("worst", "raise"):
            raise InvalidInputError("on_error must be 'worst' or 'raise'")
        if self.n_candidates < 1 or self.n_refine < 0:
            raise InvalidInputError("n_candidates must be >= 1 and n_refine >= 0")


def select_training_points(y: np.ndarray, max_points: int) -> np.ndarray:
    """Indices of the best ``max_points`` scalar values, always keeping the newest point."""
    n = y.size
    if n <= max_points:
        return np.arange(n)
    order = np.argsort(y, kind="stable")
    keep = list(order[:max_points])
    if n - 1 not in keep:
        keep[-1] = n - 1
    return np.sort(np.array(keep))


def _as_matrix(out, n: int) -> np.ndarray:
    out = np.asarray(out, dtype=float)
    if out.ndim == 1:
        out = out.reshape(n, 1) if out.size == n else out.reshape(n, -1)
    if out.ndim != 2 or out.shape[0] != n:
        raise ShapeError(f"objective returned shape {out.shape} for {n} points")
    return out


def _evaluate(objective, X: np.ndarray, on_error: str) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the rows of ``X``; returns ``(Y, ok)`` with ``ok`` False for failed rows.

    With ``on_error="worst"`` a failing batch is retried row by row so that
    only the offending points are marked as failed.
    """
    try:
        Y = _as_matrix(objective(X), X.shape[0])
    except Exception:
        if on_error == "raise":
            raise
        if X.shape[0] > 1:
            parts = [_evaluate(objective, x[None, :], on_error) for x in X]
            m = max(p[0].shape[1] for p in parts)
            Y = np.full((X.shape[0], m), np.nan)
            for i, (Yi, _) in enumerate(parts):
                Y[i, : Yi.shape[1]] = Yi[0]
            return Y, np.array([p[1][0] for p in parts])
        logger.warning("objective failed at %s", X[0], exc_info=True)
        return np.full((1, 1), np.nan), np.array([False])
    ok = np.all(np.isfinite(Y), axis=1)
    if on_error == "raise" and not np.all(ok):
        raise FloatingPointError("objective returned non-finite values")
    return Y, ok


class _History:
    def __init__(self):
        self.X: list[np.ndarray] = []
        self.Y: list[np.ndarray] = []
        self.ok: list[bool] = []

    def extend(self, X, Y, ok):
        width = max([len(r) for r in self.Y] + [Y.shape[1]])
        if any(len(r) != width for r in self.Y) or Y.shape[1] != width:
            self.Y = [np.pad(r, (0, width - len(r)), constant_values=np.nan) for r in self.Y]
            Y = np.pad(Y, ((0, 0), (0, width - Y.shape[1])), constant_values=np.nan)
        self.X.extend(X)
        self.Y.extend(Y)
        self.ok.extend(ok)

    def scalarize(self, mo2so) -> np.ndarray:
        X = np.array(self.X)
        Y = np.array(self.Y)
        ok = np.array(self.ok)
        y = np.full(len(X), np.nan)
        if np.any(ok):
            y[ok] = np.asarray(mo2so(Y[ok]), dtype=float).ravel()
        worst = np.nanmax(y) if np.any(np.isfinite(y)) else 0.0
        # failed rows take the worst value seen so far at the time they were recorded
        for i in np.flatnonzero(~ok):
            prior = y[:i][np.isfinite(y[:i])]
            y[i] = prior.max() if prior.size else worst
        return y


def propose_infill(
    model: GPModel,
    bounds: np.ndarray,
    best_y: float,
    rng: np.random.Generator,
    infill: str = "expected_improvement",
    n_candidates: int = 256,
    n_refine: int = 4,
) -> np.ndarray:
    """Next point: best of random candidates, refined by Nelder-Mead and clipped to bounds."""
    lo, hi = bounds[:, 0], bounds[:, 1]
    cand = rng.uniform(lo, hi, size=(n_candidates, bounds.shape[0]))

    def score(X):
        mu, sigma = gp_predict(model, X)
        if infill == "posterior_mean":
            return mu
        return -ei_from_moments(mu, sigma, best_y)

    s = score(cand)
    if infill == "expected_improvement" and np.all(s >= 0):
        # EI vanished numerically; fall back to the most uncertain candidate
        _, sigma = gp_predict(model, cand)
        return cand[int(np.argmax(sigma))]

    best_x = cand[int(np.argmin(s))]
    best_s = float(np.min(s))
    for i in np.argsort(s, kind="stable")[:n_refine]:
        run = nelder_mead(lambda x: float(score(np.clip(x, lo, hi)[None, :])[0]), cand[i], _REFINE_NM)
        if run.f_best < best_s:
            best_s, best_x = run.f_best, np.clip(run.x_best, lo, hi)
    return best_x


def sbo_minimize(objective: Callable[[np.ndarray], np.ndarray], config: SboConfig) -> RunResult:
    """Minimize the scalarized ``objective`` within the evaluation budget.

    Returns the full trace: points ``X``, scalar values ``y``, raw outcomes
    ``Y_mo`` and the best point. ``nit`` counts surrogate-guided evaluations.
    """
    mo2so = config.mo2so or first_objective
    bounds = config.bounds
    lhs_ss, gp_ss, infill_ss = np.random.SeedSequence(config.seed).spawn(3)
    gp_rng = np.random.default_rng(gp_ss)
    infill_rng = np.random.default_rng(infill_ss)

    hist = _History()
    X0 = lhs_sample(config.n_initial, bounds, np.random.default_rng(lhs_ss))
    hist.extend(X0, *_evaluate(objective, X0, config.on_error))

    nit = 0
    while len(hist.X) < config.max_iter:
        y = hist.scalarize(mo2so)
        X = np.array(hist.X)
        idx = select_training_points(y, config.max_surrogate_points)
        model = gp_fit(X[idx], y[idx], config.kernel, config.gp_restarts, gp_rng)
        x_new = propose_infill(
            model,
            bounds,
            float(y[idx].min()),
            infill_rng,
            config.infill,
            config.n_candidates,
            config.n_refine,
        )
        hist.extend(x_new[None, :], *_evaluate(objective, x_new[None, :], config.on_error))
        nit += 1

    y = hist.scalarize(mo2so)
    X = np.array(hist.X)
    Y = np.array(hist.Y)
    i = int(np.argmin(y))
    return RunResult(
        X=X,
        y=y,
        x_best=X[i].copy(),
        f_best=float(y[i]),
        nit=nit,
        nfev=len(y),
        converged=True,
        message=f"maximum evaluations ({config.max_iter}) reached",
        Y_mo=Y,
        info={"failed": int(np.sum(~np.array(hist.ok)))},
    )


def pareto_mask(Y, senses: Sequence[str]) -> np.ndarray:
    """Boolean mask of the non-dominated rows of ``Y``.

    ``senses`` gives ``"min"`` or ``"max"`` per column. Rows containing NaN are
    never on the front. Exact duplicates of a front row are all kept.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if len(senses) != Y.shape[1]:
        raise ShapeError(f"need {Y.shape[1]} senses, got {len(senses)}")
    sign = []
    for s in senses:
        if s not in ("min", "max"):
            raise InvalidInputError(f"sense must be 'min' or 'max', got {s!r}")
        sign.append(1.0 if s == "min" else -1.0)
    Z = Y * np.array(sign)
    finite = np.all(np.isfinite(Z), axis=1)
    mask = finite.copy()
    for i in np.flatnonzero(finite):
        others = Z[finite]
        dominated = np.any(np.all(others <= Z[i], axis=1) & np.any(others < Z[i], axis=1))
        mask[i] = not dominated
    return mask

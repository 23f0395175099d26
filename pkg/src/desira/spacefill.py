"""Morris-Mitchell space-filling criteria and exploration-aware infill.

A sampling plan is scored through its distance profile: the distinct pairwise
distances ``d_1 < ... < d_m`` and their multiplicities ``J_i``. The classic
criterion ``Phi_q = (sum J_i d_i^-q)^(1/q)`` grows with the number of points;
the intensive variant divides the sum by the number of pairs ``n(n-1)/2`` so
designs of different sizes can be compared. Lower is more space-filling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist, pdist

from desira.desirability import DMax, Desirability
from desira.errors import InvalidInputError, ShapeError, ZeroDistanceError
from desira.result import RunResult, fmt17
from desira.surrogate import SboConfig, sbo_minimize

DISTANCE_TOL = 1e-9
MIN_SPREAD = 1e-6


@dataclass(frozen=True)
class MMParams:
    q: float = 2.0
    p: float = 2.0

    def __post_init__(self):
        if not self.q > 0:
            raise InvalidInputError("q must be positive")
        if not self.p >= 1:
            raise InvalidInputError("p must be >= 1")


@dataclass
class SamplingPlan:
    """An ``(n, k)`` design with lazily cached distance profiles (one per norm order)."""

    points: np.ndarray
    _profiles: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.ndim != 2:
            raise ShapeError("a sampling plan must be a 2-D array")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def profile(self, p: float = 2.0, tol: float = DISTANCE_TOL) -> tuple[np.ndarray, np.ndarray]:
        key = (float(p), float(tol))
        if key not in self._profiles:
            self._profiles[key] = _profile(self.points, p, tol)
        return self._profiles[key]


def _as_plan(plan) -> SamplingPlan:
    return plan if isinstance(plan, SamplingPlan) else SamplingPlan(plan)


def _pairwise(X: np.ndarray, p: float) -> np.ndarray:
    return pdist(X, "minkowski", p=p)


def _profile(X: np.ndarray, p: float, tol: float) -> tuple[np.ndarray, np.ndarray]:
    if X.shape[0] < 2:
        raise InvalidInputError("a distance profile needs at least two points")
    dist = np.sort(_pairwise(X, p))
    if dist[0] <= tol:
        raise ZeroDistanceError("sampling plan contains duplicate points")
    # values within tol of the first member of a group share that distance
    d, J = [dist[0]], [1]
    for v in dist[1:]:
        if v - d[-1] <= tol:
            J[-1] += 1
        else:
            d.append(v)
            J.append(1)
    return np.array(d), np.array(J, dtype=int)


def distance_profile(plan, p: float = 2.0, tol: float = DISTANCE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Distinct pairwise distances ``d`` (increasing) and their multiplicities ``J``."""
    return _as_plan(plan).profile(p, tol)


def mmphi(plan, q: float = 2.0, p: float = 2.0) -> float:
    """Morris-Mitchell criterion ``(sum_i J_i d_i^-q)^(1/q)``."""
    MMParams(q, p)
    d, J = distance_profile(plan, p)
    return float(np.sum(J * d ** (-q)) ** (1.0 / q))


def mmphi_intensive(plan, q: float = 2.0, p: float = 2.0) -> tuple[float, np.ndarray, np.ndarray]:
    """Size-invariant criterion ``((1/M) sum_i J_i d_i^-q)^(1/q)`` with ``M = n(n-1)/2``.

    Returns:
        ``(value, J, d)``.

    Examples:
        >>> X3 = [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]
        >>> value, J, d = mmphi_intensive(X3, q=2, p=2)
        >>> round(value, 12), J.tolist()
        (1.224744871392, [2, 1])
    """
    MMParams(q, p)
    plan = _as_plan(plan)
    d, J = plan.profile(p)
    M = plan.n * (plan.n - 1) / 2
    return float((np.sum(J * d ** (-q)) / M) ** (1.0 / q)), J, d


def mm_improvement(plan, x_new, q: float = 2.0, p: float = 2.0) -> float:
    """Decrease of the intensive criterion when ``x_new`` joins the plan.

    Only the ``n`` distances from ``x_new`` to the existing points are
    computed; the old pair sum comes from the plan's cached profile. Positive
    values mean the augmented design fills space better.
    """
    MMParams(q, p)
    plan = _as_plan(plan)
    x_new = np.asarray(x_new, dtype=float).reshape(1, -1)
    if x_new.shape[1] != plan.k:
        raise ShapeError(f"point has {x_new.shape[1]} coordinates, plan has {plan.k}")
    d, J = plan.profile(p)
    n = plan.n
    new_d = cdist(x_new, plan.points, "minkowski", p=p).ravel()
    if np.min(new_d) <= DISTANCE_TOL:
        raise ZeroDistanceError("new point duplicates an existing design point")
    s_old = np.sum(J * d ** (-q))
    s_new = s_old + np.sum(new_d ** (-q))
    phi_old = (s_old / (n * (n - 1) / 2)) ** (1.0 / q)
    phi_new = (s_new / ((n + 1) * n / 2)) ** (1.0 / q)
    return float(phi_old - phi_new)


def ackley(X, a: float = 20.0, b: float = 0.2, c: float = 2 * np.pi) -> np.ndarray:
    """Ackley function for each row of ``X``; global minimum 0 at the origin."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    term1 = -a * np.exp(-b * np.sqrt(np.mean(X**2, axis=1)))
    term2 = -np.exp(np.mean(np.cos(c * X), axis=1))
    return term1 + term2 + a + np.e


def clustered_design(
    n: int,
    k: int,
    center,
    spread: float,
    seed: int | np.random.Generator | None,
    bounds=None,
) -> SamplingPlan:
    """``n`` Gaussian points around ``center``, clipped to ``bounds`` when given."""
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    if not spread > MIN_SPREAD:
        raise InvalidInputError(f"spread must exceed {MIN_SPREAD}")
    center = np.broadcast_to(np.asarray(center, dtype=float), (k,))
    rng = np.random.default_rng(seed)
    X = center + spread * rng.standard_normal((n, k))
    if bounds is not None:
        b = np.asarray(bounds, dtype=float)
        X = np.clip(X, b[:, 0], b[:, 1])
    return SamplingPlan(X)


@dataclass
class ExploreResult:
    """Outcome of :func:`explore_exploit_run`.

    ``phase[i]`` is 1 when point ``i`` was scored with the combined
    objective/space-filling desirability and 2 when only the objective
    desirability was used; ``call[i]`` is the 1-based objective call that
    evaluated it.
    """

    run: RunResult
    f: np.ndarray
    obj_improvement: np.ndarray
    mm_improvement: np.ndarray
    phase: np.ndarray
    call: np.ndarray
    f_ref: float
    d_obj: Desirability
    d_mm: Desirability

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.f))

    @property
    def best_x(self) -> np.ndarray:
        return self.run.X[self.best_index]

    @property
    def best_f(self) -> float:
        return float(self.f[self.best_index])

    def write_trace(self, path) -> None:
        self.run.write_trace(path, extra={"phase": list(self.phase), "call": list(self.call)})


def calibrate_objective_desirability(
    objective: Callable, bounds, f_ref: float, n: int = 1000, seed=None
) -> DMax:
    """``DMax(0, I)`` where ``I`` is the best improvement over ``f_ref`` among ``n`` random points."""
    b = np.asarray(bounds, dtype=float)
    rng = np.random.default_rng(seed)
    X = rng.uniform(b[:, 0], b[:, 1], size=(n, b.shape[0]))
    best_improvement = f_ref - float(np.min(objective(X)))
    if not best_improvement > 0:
        best_improvement = 1.0
    return DMax(0.0, best_improvement)


def explore_exploit_run(
    objective: Callable,
    bounds,
    X0,
    budget: int,
    switch_after: int,
    seed: int,
    d_obj: Desirability | None = None,
    d_mm: Desirability | None = None,
    n_initial: int = 10,
    q: float = 2.0,
    p: float = 2.0,
    update_reference: bool = False,
    **sbo_options,
) -> ExploreResult:
    """Surrogate search trading objective improvement against space-filling.

    Each evaluated point gets an objective improvement ``f_ref - f(x)`` and a
    Morris-Mitchell improvement against the reference design (initially
    ``X0``). During the first ``switch_after`` objective calls the optimizer
    minimizes ``1 - D`` with ``D`` the geometric mean of both desirabilities;
    afterwards it minimizes ``1 - d_obj``. ``f_ref`` is the best value on
    ``X0``. With ``update_reference`` the reference best value and design
    follow the evaluated points; otherwise they stay fixed so that scores of
    earlier evaluations remain comparable.

    If ``d_obj`` is omitted it is calibrated as ``DMax(0, I)`` with ``I`` the
    largest improvement over ``f_ref`` seen on 1000 random points.
    """
    if budget < 2:
        raise InvalidInputError("budget must be >= 2")
    if switch_after < 0:
        raise InvalidInputError("switch_after must be >= 0")
    b = np.asarray(bounds, dtype=float)
    plan = _as_plan(X0)
    if plan.k != b.shape[0]:
        raise ShapeError("X0 and bounds disagree on the dimension")
    calib_ss, run_ss = np.random.SeedSequence(seed).spawn(2)
    f_ref = float(np.min(objective(plan.points)))
    if d_obj is None:
        d_obj = calibrate_objective_desirability(objective, b, f_ref, seed=np.random.default_rng(calib_ss))
    if d_mm is None:
        d_mm = DMax(-0.1, 1.1, scale=2)

    state = {"calls": 0, "f_ref": f_ref, "plan": plan}
    phases: list[int] = []
    calls: list[int] = []

    def scored(X):
        state["calls"] += 1
        phase = 1 if state["calls"] <= switch_after else 2
        X = np.atleast_2d(X)
        f = np.asarray(objective(X), dtype=float).ravel()
        obj_imp = state["f_ref"] - f
        mm_imp = np.empty(len(X))
        d_space = np.empty(len(X))
        for i, x in enumerate(X):
            try:
                mm_imp[i] = mm_improvement(state["plan"], x, q, p)
                d_space[i] = d_mm(mm_imp[i])
            except ZeroDistanceError:
                mm_imp[i] = np.nan
                d_space[i] = 0.0
        d_o = d_obj.predict(obj_imp)
        D = np.sqrt(d_o * d_space) if phase == 1 else d_o
        if update_reference:
            state["f_ref"] = min(state["f_ref"], float(np.min(f)))
            state["plan"] = SamplingPlan(np.vstack([state["plan"].points, X]))
        phases.extend([phase] * len(X))
        calls.extend([state["calls"]] * len(X))
        return np.column_stack([1.0 - D, f, obj_imp, mm_imp])

    def first_column(Y):
        return Y[:, 0]

    config = SboConfig(
        bounds=b,
        seed=int(np.random.default_rng(run_ss).integers(2**31)),
        n_initial=min(n_initial, budget),
        max_iter=budget,
        mo2so=first_column,
        **sbo_options,
    )
    run = sbo_minimize(scored, config)
    return ExploreResult(
        run=run,
        f=run.Y_mo[:, 1],
        obj_improvement=run.Y_mo[:, 2],
        mm_improvement=run.Y_mo[:, 3],
        phase=np.array(phases),
        call=np.array(calls),
        f_ref=f_ref,
        d_obj=d_obj,
        d_mm=d_mm,
    )


@dataclass
class DimensionDiagnostics:
    dimension: int
    bin_edges: np.ndarray
    counts: np.ndarray
    five_numbers: tuple[float, float, float, float, float]
    x_best: float
    percentile: float


def infill_diagnostics(X0, x_best, bins: int = 10) -> list[DimensionDiagnostics]:
    """Per-dimension histogram and five-number summary of ``X0`` with the infill point's rank.

    The percentile is the share of design values ``<=`` the infill coordinate.
    """
    X0 = np.atleast_2d(np.asarray(X0.points if isinstance(X0, SamplingPlan) else X0, dtype=float))
    x_best = np.asarray(x_best, dtype=float).ravel()
    if x_best.size != X0.shape[1]:
        raise ShapeError(f"x_best has {x_best.size} coordinates, design has {X0.shape[1]}")
    if bins < 1:
        raise InvalidInputError("bins must be >= 1")
    out = []
    for j in range(X0.shape[1]):
        col = X0[:, j]
        counts, edges = np.histogram(col, bins=bins)
        five = tuple(float(v) for v in np.percentile(col, [0, 25, 50, 75, 100]))
        pct = 100.0 * np.count_nonzero(col <= x_best[j]) / col.size
        out.append(DimensionDiagnostics(j + 1, edges, counts, five, float(x_best[j]), float(pct)))
    return out


def write_diagnostics(diags: list[DimensionDiagnostics], hist_path, summary_path) -> None:
    with open(hist_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dimension", "bin_low", "bin_high", "count"])
        for dg in diags:
            for lo, hi, c in zip(dg.bin_edges[:-1], dg.bin_edges[1:], dg.counts):
                w.writerow([dg.dimension, fmt17(lo), fmt17(hi), int(c)])
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dimension", "min", "q1", "median", "q3", "max", "x_best", "percentile"])
        for dg in diags:
            w.writerow([dg.dimension, *map(fmt17, dg.five_numbers), fmt17(dg.x_best), fmt17(dg.percentile)])


def read_design(path) -> SamplingPlan:
    """Read a headerless CSV design, one point per row."""
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    return SamplingPlan(X)


def write_design(path, plan) -> None:
    X = _as_plan(plan).points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in X:
            w.writerow([fmt17(v) for v in row])

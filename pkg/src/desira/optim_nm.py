"""Nelder-Mead simplex minimization and multistart desirability maximization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from desira.desirability import DOverall
from desira.errors import InvalidInputError
from desira.result import RunResult

DEGENERATE_START = "degenerate start"


@dataclass(frozen=True)
class NMOptions:
    max_iter: int = 1000
    max_fev: int | None = None
    x_tol: float = 1e-8
    f_tol: float = 1e-8
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1")
        if not self.reflection > 0:
            raise InvalidInputError("reflection must be > 0")
        if not self.expansion > 1:
            raise InvalidInputError("expansion must be > 1")
        if not 0 < self.contraction < 1:
            raise InvalidInputError("contraction must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise InvalidInputError("shrink must lie in (0, 1)")


@dataclass(frozen=True)
class RegionSpec:
    """Feasible design region: a cube ``|x_i| <= alpha`` or a ball ``||x|| <= alpha``."""

    shape: str = "square"
    alpha: float = 1.682

    def __post_init__(self):
        if self.shape not in ("square", "circular"):
            raise InvalidInputError("space must be 'square' or 'circular'")
        if not self.alpha > 0:
            raise InvalidInputError("alpha must be positive")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.shape == "circular":
            return bool(np.sqrt(np.sum(x**2)) <= self.alpha)
        return bool(np.all(np.abs(x) <= self.alpha))


def rsm_opt(
    x,
    overall: DOverall,
    prediction_funcs: Sequence[Callable],
    region: RegionSpec | str = "square",
    alpha: float = 1.682,
) -> float:
    """Negative overall desirability of the predictions at ``x``; 0.0 outside the region.

    Minimizing this maximizes desirability inside the region.
    """
    if isinstance(region, str):
        region = RegionSpec(region, alpha)
    if len(prediction_funcs) != len(overall):
        raise InvalidInputError("need one prediction function per desirability component")
    if not region.contains(x):
        return 0.0
    predictions = [func(x) for func in prediction_funcs]
    return -float(overall.predict(np.array([predictions]))[0])


def initial_simplex(x0) -> np.ndarray:
    """``x0`` plus one vertex per coordinate, perturbed by 5% (0.00025 at zero)."""
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    sim = np.tile(x0, (k + 1, 1))
    for i in range(k):
        sim[i + 1, i] = 1.05 * x0[i] if x0[i] != 0 else 0.00025
    return sim


def nelder_mead(f: Callable, x0, options: NMOptions | None = None) -> RunResult:
    """Minimize ``f`` from ``x0`` with the Nelder-Mead simplex method.

    Stops when both the spread of vertex values and the spread of vertices
    around the best one fall to the tolerances, or when ``max_iter`` /
    ``max_fev`` is exhausted (then ``converged`` is False). If all vertices of
    the initial simplex share one value the run stops immediately with message
    ``"degenerate start"``, since the simplex cannot descend on a plateau.
    """
    opts = options or NMOptions()
    rho, chi, psi, sigma = opts.reflection, opts.expansion, opts.contraction, opts.shrink
    max_fev = opts.max_fev if opts.max_fev is not None else np.inf

    xs: list[np.ndarray] = []
    fs: list[float] = []

    def call(x):
        v = float(f(x))
        xs.append(np.array(x, dtype=float))
        fs.append(v)
        return v

    sim = initial_simplex(x0)
    k = sim.shape[1]
    fsim = np.array([call(v) for v in sim])

    def finish(nit, converged, message):
        i = int(np.argmin(fsim))
        return RunResult(
            X=np.array(xs).reshape(len(xs), k),
            y=np.array(fs),
            x_best=sim[i].copy(),
            f_best=float(fsim[i]),
            nit=nit,
            nfev=len(fs),
            converged=converged,
            message=message,
        )

    if np.all(fsim == fsim[0]):
        return finish(0, False, DEGENERATE_START)

    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]

    nit = 0
    while nit < opts.max_iter and len(fs) < max_fev:
        if (
            np.max(np.abs(sim[1:] - sim[0])) <= opts.x_tol
            and np.max(np.abs(fsim[0] - fsim[1:])) <= opts.f_tol
        ):
            return finish(nit, True, "converged")

        xbar = sim[:-1].mean(axis=0)
        xr = (1 + rho) * xbar - rho * sim[-1]
        fxr = call(xr)
        shrink = False
        if fxr < fsim[0]:
            xe = (1 + rho * chi) * xbar - rho * chi * sim[-1]
            fxe = call(xe)
            if fxe < fxr:
                sim[-1], fsim[-1] = xe, fxe
            else:
                sim[-1], fsim[-1] = xr, fxr
        elif fxr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fxr
        elif fxr < fsim[-1]:
            xc = (1 + psi * rho) * xbar - psi * rho * sim[-1]
            fxc = call(xc)
            if fxc <= fxr:
                sim[-1], fsim[-1] = xc, fxc
            else:
                shrink = True
        else:
            xcc = (1 - psi) * xbar + psi * sim[-1]
            fxcc = call(xcc)
            if fxcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fxcc
            else:
                shrink = True
        if shrink:
            for j in range(1, k + 1):
                sim[j] = sim[0] + sigma * (sim[j] - sim[0])
                fsim[j] = call(sim[j])
        nit += 1
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]

    reason = "maximum iterations reached" if nit >= opts.max_iter else "maximum evaluations reached"
    return finish(nit, False, reason)


def multistart_maximize_desirability(
    overall: DOverall,
    prediction_funcs: Sequence[Callable],
    region: RegionSpec,
    starts,
    options: NMOptions | None = None,
) -> RunResult:
    """Run Nelder-Mead on :func:`rsm_opt` from every start and keep the best run.

    Runs flagged as degenerate starts are skipped unless every start is
    degenerate. Ties go to the earliest start. The returned result's ``info``
    holds ``start_index``, ``n_starts``, ``n_skipped`` and the best value of
    each run (``run_f_best``, NaN for skipped runs).
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.shape[0] == 0:
        raise InvalidInputError("at least one start is required")

    def objective(x):
        return rsm_opt(x, overall, prediction_funcs, region)

    runs = [nelder_mead(objective, s, options) for s in starts]
    usable = [i for i, r in enumerate(runs) if r.message != DEGENERATE_START] or list(range(len(runs)))
    best = min(usable, key=lambda i: (runs[i].f_best, i))
    result = runs[best]
    result.info.update(
        start_index=best,
        n_starts=len(runs),
        n_skipped=len(runs) - len(usable) if len(usable) < len(runs) else 0,
        run_f_best=[r.f_best if i in usable else float("nan") for i, r in enumerate(runs)],
    )
    return result


def search_grid(low: float = -1.5, high: float = 1.5, n: int = 5, k: int = 3) -> np.ndarray:
    """Restart grid with ``n`` levels per axis, first coordinate varying slowest."""
    axis = np.linspace(low, high, n)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])

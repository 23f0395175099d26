"""Response-surface models of the chemical-reaction example, CCD designs and plot grids.

The two fitted second-order models describe percent conversion and thermal
activity as functions of coded reaction time ``x1``, temperature ``x2`` and
percent catalyst ``x3``.
"""

from __future__ import annotations

import csv
import inspect
import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from desira.errors import ConfigError, InvalidInputError, ShapeError


def _as_point(x, k: int = 3) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (k,):
        raise ShapeError(f"expected a point with {k} coordinates, got shape {x.shape}")
    return x


def conversion_pred(x) -> float:
    """Predicted percent conversion at the coded point ``x = (x1, x2, x3)``."""
    x1, x2, x3 = _as_point(x)
    return float(
        81.09
        + 1.0284 * x1
        + 4.043 * x2
        + 6.2037 * x3
        - 1.8366 * x1**2
        + 2.9382 * x2**2
        - 5.1915 * x3**2
        + 2.2150 * x1 * x2
        + 11.375 * x1 * x3
        - 3.875 * x2 * x3
    )


def activity_pred(x) -> float:
    """Predicted thermal activity at the coded point ``x = (x1, x2, x3)``."""
    x1, x2, x3 = _as_point(x)
    return float(
        59.85
        + 3.583 * x1
        + 0.2546 * x2
        + 2.2298 * x3
        + 0.83479 * x1**2
        + 0.07484 * x2**2
        + 0.05716 * x3**2
        - 0.3875 * x1 * x2
        - 0.375 * x1 * x3
        + 0.3125 * x2 * x3
    )


def fun_myer16a(X) -> np.ndarray:
    """Vectorized conversion and activity: ``(n, 3)`` inputs to ``(n, 2)`` outputs."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.empty((0, 2))
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ShapeError(f"expected 3 columns, got shape {X.shape}")
    return np.array([[conversion_pred(row), activity_pred(row)] for row in X])


@dataclass
class QuadraticModel:
    """Full second-order polynomial in ``k`` variables.

    ``interactions`` maps index pairs ``(i, j)`` with ``i < j`` to coefficients;
    missing pairs are zero.
    """

    intercept: float
    linear: np.ndarray
    quadratic: np.ndarray
    interactions: dict[tuple[int, int], float]

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        self.quadratic = np.asarray(self.quadratic, dtype=float)
        k = self.linear.size
        if k < 1 or self.linear.shape != (k,) or self.quadratic.shape != (k,):
            raise ShapeError("linear and quadratic coefficients must be 1-D of equal length >= 1")
        for i, j in self.interactions:
            if not (0 <= i < j < k):
                raise ShapeError(f"bad interaction index pair {(i, j)} for k={k}")

    @property
    def k(self) -> int:
        return self.linear.size

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.k:
            raise ShapeError(f"expected {self.k} columns, got {X.shape[1]}")
        y = self.intercept + X @ self.linear + (X**2) @ self.quadratic
        for (i, j), c in self.interactions.items():
            y = y + c * X[:, i] * X[:, j]
        return y

    @classmethod
    def from_csv(cls, path) -> "QuadraticModel":
        """Load coefficients from ``term,label,value`` rows.

        Labels name variables ``x1..xk``; interactions use ``xi:xj``.
        """
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls._from_rows(rows)

    @classmethod
    def _from_rows(cls, rows) -> "QuadraticModel":
        def index(label: str) -> int:
            label = label.strip()
            if not label.startswith("x") or not label[1:].isdigit() or int(label[1:]) < 1:
                raise ConfigError(f"bad variable label {label!r}")
            return int(label[1:]) - 1

        intercept = 0.0
        linear: dict[int, float] = {}
        quadratic: dict[int, float] = {}
        inter: dict[tuple[int, int], float] = {}
        for row in rows:
            term, label, value = row["term"].strip(), row["label"] or "", float(row["value"])
            if term == "intercept":
                intercept = value
            elif term == "linear":
                linear[index(label)] = value
            elif term == "quadratic":
                quadratic[index(label)] = value
            elif term == "interaction":
                a, b = sorted(index(s) for s in label.split(":"))
                inter[(a, b)] = value
            else:
                raise ConfigError(f"unknown term {term!r}")
        k = 1 + max([*linear, *quadratic, *(j for _, j in inter)], default=0)
        lin = np.array([linear.get(i, 0.0) for i in range(k)])
        quad = np.array([quadratic.get(i, 0.0) for i in range(k)])
        return cls(intercept, lin, quad, inter)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "label", "value"])
            w.writerow(["intercept", "", repr(float(self.intercept))])
            for i, c in enumerate(self.linear):
                w.writerow(["linear", f"x{i + 1}", repr(float(c))])
            for i, c in enumerate(self.quadratic):
                w.writerow(["quadratic", f"x{i + 1}", repr(float(c))])
            for (i, j), c in sorted(self.interactions.items()):
                w.writerow(["interaction", f"x{i + 1}:x{j + 1}", repr(float(c))])


def load_builtin_model(name: str) -> QuadraticModel:
    """Load the packaged ``conversion`` or ``activity`` coefficient file."""
    ref = resources.files("desira") / "data" / f"{name}.csv"
    if not ref.is_file():
        raise ConfigError(f"no packaged model named {name!r}")
    with resources.as_file(ref) as path:
        return QuadraticModel.from_csv(Path(path))


@dataclass
class CCDesign:
    k: int
    alpha: float
    points: np.ndarray

    @property
    def n_factorial(self) -> int:
        return 2**self.k


def generate_ccd(k: int, alpha: float | None = None, n_center: int = 1) -> CCDesign:
    """Central composite design in coded units.

    Rows are the ``2**k`` factorial corners, then ``n_center`` center points,
    then the ``2k`` axial points ordered ``-alpha, +alpha`` per axis. The default
    ``alpha = (2**k) ** 0.25`` makes the design rotatable.
    """
    if int(k) != k or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    if n_center < 0:
        raise InvalidInputError("n_center must be non-negative")
    k = int(k)
    if alpha is None:
        alpha = (2.0**k) ** 0.25
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    factorial = np.array(list(itertools.product([-1.0, 1.0], repeat=k)))
    center = np.zeros((n_center, k))
    axial = np.zeros((2 * k, k))
    for i in range(k):
        axial[2 * i, i] = -alpha
        axial[2 * i + 1, i] = alpha
    return CCDesign(k=k, alpha=float(alpha), points=np.vstack([factorial, center, axial]))


def generate_plot_grid(
    ranges: Mapping[str, Sequence[float]],
    resolutions: Mapping[str, int],
    functions: Mapping[str, Callable] | None = None,
    facet_levels: Mapping[str, Sequence[float]] | None = None,
) -> pd.DataFrame:
    """Tabulate functions over a Cartesian grid of named variables.

    Each function is called with keyword arguments named after the variables it
    declares, passed as column arrays, and must return one value per row.
    Variables listed in ``facet_levels`` take only those levels. Rows iterate with
    the last variable fastest.
    """
    functions = dict(functions or {})
    facet_levels = dict(facet_levels or {})
    names = list(ranges) + [v for v in facet_levels if v not in ranges]
    axes = []
    for name in names:
        if name in facet_levels:
            levels = np.asarray(facet_levels[name], dtype=float)
            if levels.size == 0:
                raise ConfigError(f"facet {name!r} has no levels")
            axes.append(levels)
            continue
        if name not in resolutions:
            raise ConfigError(f"no resolution given for {name!r}")
        res = int(resolutions[name])
        if res < 2:
            raise ConfigError(f"resolution for {name!r} must be >= 2")
        lo, hi = ranges[name]
        axes.append(np.linspace(float(lo), float(hi), res))
    mesh = np.meshgrid(*axes, indexing="ij")
    table = pd.DataFrame({name: m.ravel() for name, m in zip(names, mesh)})
    for fname, fn in functions.items():
        params = list(inspect.signature(fn).parameters)
        unknown = [p for p in params if p not in names]
        if unknown:
            raise ConfigError(f"function {fname!r} uses unknown variables {unknown}")
        out = np.asarray(fn(**{p: table[p].to_numpy() for p in params}), dtype=float)
        table[fname] = np.broadcast_to(out, (len(table),)).copy()
    return table


def chemical_grid_functions() -> dict[str, Callable]:
    """Grid functions for the chemical example (columns ``time, temperature, catalyst``)."""

    def conversionPred(time, temperature, catalyst):
        return fun_myer16a(np.column_stack([time, temperature, catalyst]))[:, 0]

    def activityPred(time, temperature, catalyst):
        return fun_myer16a(np.column_stack([time, temperature, catalyst]))[:, 1]

    return {"conversionPred": conversionPred, "activityPred": activityPred}

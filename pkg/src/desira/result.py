"""Optimization traces shared by the optimizers."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def fmt17(value: float) -> str:
    """Round-trippable float formatting for CSV output."""
    return format(float(value), ".17g")


@dataclass
class RunResult:
    """Trace of one optimization run.

    Attributes:
        X: Evaluated points, one row per evaluation.
        y: Scalar objective value of each evaluation.
        x_best: Best point found.
        f_best: Objective value at ``x_best``.
        nit: Iterations performed.
        nfev: Number of objective evaluations (equals ``len(y)``).
        converged: Whether the stopping criterion was met.
        message: Human-readable termination reason.
        Y_mo: Raw multi-objective values, when the objective produced them.
    """

    X: np.ndarray
    y: np.ndarray
    x_best: np.ndarray
    f_best: float
    nit: int
    nfev: int
    converged: bool
    message: str = ""
    Y_mo: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        """Index of the first evaluation attaining the minimum of ``y``."""
        return int(np.argmin(self.y))

    def summary(self) -> dict:
        return {
            "x_best": [float(v) for v in self.x_best],
            "f_best": float(self.f_best),
            "nit": int(self.nit),
            "nfev": int(self.nfev),
            "converged": bool(self.converged),
            "message": self.message,
        }

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")

    def trace_rows(self, extra: dict[str, list] | None = None) -> tuple[list[str], list[list[str]]]:
        """CSV header and rows: eval index, coordinates, raw outputs, scalar, best flag."""
        k = self.X.shape[1]
        header = ["eval"] + [f"x{i + 1}" for i in range(k)]
        m = 0 if self.Y_mo is None else self.Y_mo.shape[1]
        header += [f"y_mo{j + 1}" for j in range(m)]
        header += ["y_scalar", "is_best"]
        extra = extra or {}
        header += list(extra)
        best = self.best_index if len(self.y) else -1
        rows = []
        for i in range(len(self.y)):
            row = [str(i)] + [fmt17(v) for v in self.X[i]]
            if m:
                row += [fmt17(v) for v in self.Y_mo[i]]
            row += [fmt17(self.y[i]), "1" if i == best else "0"]
            row += [str(col[i]) for col in extra.values()]
            rows.append(row)
        return header, rows

    def write_trace(self, path, extra: dict[str, list] | None = None) -> None:
        header, rows = self.trace_rows(extra)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def read_trace(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read a trace written by :meth:`RunResult.write_trace`.

    Returns:
        ``(X, y_scalar, Y_mo)``; ``Y_mo`` is ``None`` if the trace has no raw outputs.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader]
    xcols = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    mcols = [i for i, h in enumerate(header) if h.startswith("y_mo")]
    ycol = header.index("y_scalar")
    X = np.array([[float(r[i]) for i in xcols] for r in rows]).reshape(len(rows), len(xcols))
    y = np.array([float(r[ycol]) for r in rows])
    Y = np.array([[float(r[i]) for i in mcols] for r in rows]) if mcols else None
    return X, y, Y

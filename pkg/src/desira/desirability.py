"""Derringer-Suich desirability functions and their overall combination.

Each desirability maps objective values onto ``[0, 1]`` where 1 is ideal and
0 is unacceptable. :class:`DOverall` combines several of them by the geometric
mean, so a single unacceptable component makes the whole combination
unacceptable.

Missing inputs are encoded as ``NaN`` (or ``None`` for categorical labels)
and replace by the function's non-informative value, i.e. the mean
desirability over its informative range. Setting ``missing="propagate"``
returns ``NaN`` for missing inputs instead.

Examples:
    >>> conversion = DMax(80, 97)
    >>> activity = DTarget(55, 57.5, 60)
    >>> overall = DOverall(conversion, activity)
    >>> round(float(overall.predict([81.09, 59.85])[0]), 8)
    0.06202466
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import ClassVar, Mapping, Sequence, Union

import numpy as np

from desira.errors import InvalidInputError, ShapeError, UnknownCategoryError

PROPAGATE = "propagate"

#: Grid size used for the non-informative value.
N_NON_INFORMATIVE = 100

Missing = Union[float, str, None]


def _check_unit(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")


def _check_positive(value: float, name: str) -> None:
    if not (math.isfinite(value) and value > 0):
        raise InvalidInputError(f"{name} must be a positive finite number, got {value!r}")


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"parameters must be finite, got {v!r}")


@dataclass(frozen=True)
class Desirability:
    """Common behaviour of the numeric desirability functions.

    Subclasses implement :meth:`_raw` (vectorized, finite input) and
    :meth:`informative_range`.
    """

    variant: ClassVar[str] = ""

    tol: float | None = field(default=None, kw_only=True)
    missing: Missing = field(default=None, kw_only=True)

    def __post_init__(self) -> None:
        self._validate()
        if self.tol is not None:
            if not (0.0 < self.tol <= 1.0):
                raise InvalidInputError(f"tol must lie in (0, 1], got {self.tol!r}")
        if self.missing is None:
            object.__setattr__(self, "missing", non_informative(self))
        elif isinstance(self.missing, str):
            if self.missing != PROPAGATE:
                raise InvalidInputError(f"missing must be a number or {PROPAGATE!r}")
        else:
            object.__setattr__(self, "missing", float(self.missing))
            _check_unit(self.missing, "missing")

    def _validate(self) -> None:
        raise NotImplementedError

    def _raw(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def informative_range(self) -> tuple[float, float]:
        """Interval over which the non-informative mean is taken."""
        raise NotImplementedError

    def evaluate(self, f: np.ndarray) -> np.ndarray:
        """Evaluate finite inputs, applying the zero tolerance."""
        f = np.asarray(f, dtype=float)
        if not np.all(np.isfinite(f)):
            raise InvalidInputError("desirability inputs must be finite")
        d = self._raw(f)
        if self.tol is not None:
            d = np.where(d == 0.0, self.tol, d)
        return d

    def predict(self, values) -> np.ndarray:
        """Element-wise desirability of ``values``; ``NaN`` marks a missing entry."""
        arr = np.atleast_1d(np.asarray(values, dtype=float))
        if arr.ndim != 1:
            arr = arr.ravel()
        out = np.empty_like(arr)
        miss = np.isnan(arr)
        if np.any(~miss):
            out[~miss] = self.evaluate(arr[~miss])
        if np.any(miss):
            out[miss] = np.nan if self.missing == PROPAGATE else self.missing
        return out

    def __call__(self, f: float) -> float:
        return float(self.predict([f])[0])

    def to_dict(self) -> dict:
        out = {"variant": self.variant}
        for fld in fields(self):
            value = getattr(self, fld.name)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[fld.name] = value
        return out


@dataclass(frozen=True)
class DMax(Desirability):
    """Larger-is-better: 0 below ``low``, 1 above ``high``, power ramp between."""

    variant: ClassVar[str] = "max"

    low: float
    high: float
    scale: float = 1.0

    def _validate(self) -> None:
        _check_finite(self.low, self.high)
        if not self.low < self.high:
            raise InvalidInputError("DMax requires low < high")
        _check_positive(self.scale, "scale")

    def _raw(self, f):
        ratio = np.clip((f - self.low) / (self.high - self.low), 0.0, 1.0)
        d = ratio**self.scale
        d = np.where(f < self.low, 0.0, d)
        return np.where(f > self.high, 1.0, d)

    def informative_range(self):
        return self.low, self.high


@dataclass(frozen=True)
class DMin(Desirability):
    """Smaller-is-better: 1 below ``low``, 0 above ``high``, power ramp between."""

    variant: ClassVar[str] = "min"

    low: float
    high: float
    scale: float = 1.0

    def _validate(self) -> None:
        _check_finite(self.low, self.high)
        if not self.low < self.high:
            raise InvalidInputError("DMin requires low < high")
        _check_positive(self.scale, "scale")

    def _raw(self, f):
        ratio = np.clip((f - self.high) / (self.low - self.high), 0.0, 1.0)
        d = ratio**self.scale
        d = np.where(f > self.high, 0.0, d)
        return np.where(f < self.low, 1.0, d)

    def informative_range(self):
        return self.low, self.high


@dataclass(frozen=True)
class DTarget(Desirability):
    """Target-is-best: rises on ``[low, target]``, falls on ``[target, high]``."""

    variant: ClassVar[str] = "target"

    low: float
    target: float
    high: float
    low_scale: float = 1.0
    high_scale: float = 1.0

    def _validate(self) -> None:
        _check_finite(self.low, self.target, self.high)
        if not self.low < self.target < self.high:
            raise InvalidInputError("DTarget requires low < target < high")
        _check_positive(self.low_scale, "low_scale")
        _check_positive(self.high_scale, "high_scale")

    def _raw(self, f):
        lower = np.clip((f - self.low) / (self.target - self.low), 0.0, 1.0) ** self.low_scale
        upper = np.clip((f - self.high) / (self.target - self.high), 0.0, 1.0) ** self.high_scale
        d = np.where(f <= self.target, lower, upper)
        return np.where((f < self.low) | (f > self.high), 0.0, d)

    def informative_range(self):
        return self.low, self.high


@dataclass(frozen=True)
class DArb(Desirability):
    """Piecewise-linear desirability through the points ``(x[i], d[i])``.

    Inputs outside ``[x[0], x[-1]]`` take the end desirability values.
    """

    variant: ClassVar[str] = "arb"

    x: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).copy())
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float).copy())
        self.x.setflags(write=False)
        self.d.setflags(write=False)
        super().__post_init__()

    def _validate(self) -> None:
        if self.x.ndim != 1 or self.x.shape != self.d.shape:
            raise InvalidInputError("DArb needs 1-D x and d of equal length")
        if self.x.size < 2:
            raise InvalidInputError("DArb needs at least two points")
        if not np.all(np.isfinite(self.x)) or np.any(np.diff(self.x) <= 0):
            raise InvalidInputError("DArb x must be finite and strictly increasing")
        if np.any((self.d < 0) | (self.d > 1)) or np.any(np.isnan(self.d)):
            raise InvalidInputError("DArb d values must lie in [0, 1]")

    def _raw(self, f):
        return np.interp(f, self.x, self.d)

    def informative_range(self):
        return float(self.x[0]), float(self.x[-1])

    def __eq__(self, other):
        if not isinstance(other, DArb):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.d, other.d)
            and self.tol == other.tol
            and self.missing == other.missing
        )

    __hash__ = None


@dataclass(frozen=True)
class DBox(Desirability):
    """Box constraint: 1 on ``[low, high]`` (inclusive), 0 elsewhere."""

    variant: ClassVar[str] = "box"

    low: float
    high: float

    def _validate(self) -> None:
        _check_finite(self.low, self.high)
        if not self.low < self.high:
            raise InvalidInputError("DBox requires low < high")

    def _raw(self, f):
        return np.where((f >= self.low) & (f <= self.high), 1.0, 0.0)

    def informative_range(self):
        return self.low, self.high


@dataclass(frozen=True)
class DCategorical:
    """Desirability assigned per category label."""

    variant: ClassVar[str] = "categorical"

    values: Mapping[str, float]
    tol: float | None = field(default=None, kw_only=True)
    missing: Missing = field(default=None, kw_only=True)

    def __post_init__(self) -> None:
        values = {str(k): float(v) for k, v in dict(self.values).items()}
        if not values:
            raise InvalidInputError("DCategorical needs at least one category")
        for label, v in values.items():
            _check_unit(v, f"desirability of {label!r}")
        object.__setattr__(self, "values", values)
        if self.tol is not None and not (0.0 < self.tol <= 1.0):
            raise InvalidInputError(f"tol must lie in (0, 1], got {self.tol!r}")
        if self.missing is None:
            object.__setattr__(self, "missing", non_informative(self))
        elif isinstance(self.missing, str):
            if self.missing != PROPAGATE:
                raise InvalidInputError(f"missing must be a number or {PROPAGATE!r}")
        else:
            object.__setattr__(self, "missing", float(self.missing))
            _check_unit(self.missing, "missing")

    def _lookup(self, label: str) -> float:
        try:
            d = self.values[label]
        except KeyError:
            raise UnknownCategoryError(label) from None
        if d == 0.0 and self.tol is not None:
            return self.tol
        return d

    def predict(self, labels: Sequence[str | None]) -> np.ndarray:
        if isinstance(labels, str):
            labels = [labels]
        out = np.empty(len(labels))
        for i, label in enumerate(labels):
            if label is None:
                out[i] = np.nan if self.missing == PROPAGATE else self.missing
            else:
                out[i] = self._lookup(label)
        return out

    def __call__(self, label: str) -> float:
        return float(self.predict([label])[0])

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "values": dict(self.values),
            "tol": self.tol,
            "missing": self.missing,
        }


AnyDesirability = Union[Desirability, DCategorical]


def non_informative(spec: AnyDesirability, n: int = N_NON_INFORMATIVE) -> float:
    """Mean desirability over ``n`` evenly spaced points of the informative range.

    For categorical desirabilities this is the mean of the mapped values.
    """
    if isinstance(spec, DCategorical):
        vals = [spec._lookup(k) for k in spec.values]
        return float(np.mean(vals))
    lo, hi = spec.informative_range()
    return float(np.mean(spec.evaluate(np.linspace(lo, hi, n))))


@dataclass(frozen=True, init=False)
class DOverall:
    """Geometric mean of several desirability functions.

    Column ``r`` of an outcome matrix is fed to component ``r``.
    """

    components: tuple[AnyDesirability, ...]

    def __init__(self, *components: AnyDesirability):
        if len(components) == 1 and isinstance(components[0], (list, tuple)):
            components = tuple(components[0])
        if not components:
            raise InvalidInputError("DOverall needs at least one component")
        object.__setattr__(self, "components", tuple(components))

    def __len__(self) -> int:
        return len(self.components)

    def predict(self, outcomes, all: bool = False):
        """Overall desirability for each row of ``outcomes``.

        Args:
            outcomes: ``(n, R)`` matrix, or a length-``R`` vector for one row.
            all: Also return the ``(n, R)`` matrix of individual desirabilities.

        Returns:
            The overall vector, or ``(individual, overall)`` when ``all`` is set.
        """
        R = len(self.components)
        has_categorical = any(isinstance(c, DCategorical) for c in self.components)
        arr = np.asarray(outcomes, dtype=object if has_categorical else float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != R:
            raise ShapeError(f"expected outcomes with {R} columns, got shape {arr.shape}")
        indiv = np.empty(arr.shape, dtype=float)
        for r, comp in enumerate(self.components):
            col = arr[:, r]
            if isinstance(comp, DCategorical):
                indiv[:, r] = comp.predict(list(col))
            else:
                indiv[:, r] = comp.predict(col.astype(float))
        overall = np.prod(indiv, axis=1) ** (1.0 / R)
        if all:
            return indiv, overall
        return overall


# -- plain-text serialization -------------------------------------------------

_VARIANTS: dict[str, type] = {
    cls.variant: cls for cls in (DMax, DMin, DTarget, DArb, DBox, DCategorical)
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_text(spec: AnyDesirability) -> str:
    """Serialize to ``key = value`` lines, starting with the variant."""
    d = spec.to_dict()
    lines = [f"variant = {d.pop('variant')}"]
    for key, value in d.items():
        if value is None:
            continue
        if key in ("x", "d"):
            value = ",".join(_fmt(float(v)) for v in value)
        elif key == "values":
            value = ",".join(f"{k}:{_fmt(float(v))}" for k, v in value.items())
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def from_mapping(params: Mapping[str, str]) -> AnyDesirability:
    """Build a desirability from string-valued parameters (incl. ``variant``)."""
    params = {k.strip().lower(): str(v).strip() for k, v in params.items()}
    name = params.pop("variant", None)
    if name is None:
        raise InvalidInputError("missing 'variant'")
    name = name.lower()
    if name.startswith("d") and name[1:] in _VARIANTS:
        name = name[1:]
    if name not in _VARIANTS:
        raise InvalidInputError(f"unknown desirability variant {name!r}")
    cls = _VARIANTS[name]
    kwargs: dict = {}
    for key, raw in params.items():
        if key == "missing":
            kwargs[key] = raw if raw == PROPAGATE else float(raw)
        elif key in ("x", "d"):
            kwargs[key] = [float(v) for v in raw.split(",") if v.strip()]
        elif key == "values":
            pairs = [item.split(":", 1) for item in raw.split(",") if item.strip()]
            if any(len(p) != 2 for p in pairs):
                raise InvalidInputError(f"malformed categorical values {raw!r}")
            kwargs[key] = {k.strip(): float(v) for k, v in pairs}
        else:
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise InvalidInputError(f"{key} must be numeric, got {raw!r}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from None


def from_text(text: str) -> AnyDesirability:
    """Inverse of :func:`to_text`. Blank lines and ``#`` comments are ignored."""
    params = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        params[key.strip()] = value.strip()
    return from_mapping(params)


def parse_inline(text: str) -> AnyDesirability:
    """Parse the one-line form ``max low=80 high=97 scale=1``."""
    tokens = text.split()
    if not tokens:
        raise InvalidInputError("empty desirability declaration")
    params = {"variant": tokens[0]}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise InvalidInputError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        params[key] = value
    return from_mapping(params)


def to_inline(spec: AnyDesirability) -> str:
    body = to_text(spec).strip().splitlines()
    parts = [body[0].split("=", 1)[1].strip()]
    parts += [line.replace(" = ", "=") for line in body[1:]]
    return " ".join(parts)


def sample_curve(spec: Desirability, n: int = 201, pad: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``spec`` on its informative range widened by ``pad`` on each side."""
    lo, hi = spec.informative_range()
    width = hi - lo
    x = np.linspace(lo - pad * width, hi + pad * width, n)
    return x, spec.evaluate(x)

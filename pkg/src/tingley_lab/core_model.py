"""Finite point spaces and complex-valued functions with the supremum norm.

Everything in the package sits on top of these two types.  Values are stored
as read-only ``complex128`` arrays aligned with the declared point order, so
set-valued outputs come back in that order too.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
IDENTITY_TOL = 1e-12


class ParseError(ValueError):
    """Malformed serialized input; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PointSpace:
    points: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple(str(p) for p in self.points)
        if not pts:
            raise ValueError("a point space needs at least one point")
        if len(set(pts)) != len(pts):
            raise ValueError("point identifiers must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, point):
        return point in self._index

    def index(self, point: str) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise KeyError(f"point {point!r} not in space") from None

    def ordered(self, points: Iterable[str]) -> list[str]:
        """Return ``points`` sorted by the declared order."""
        return sorted(set(points), key=self.index)


def _as_values(values, size: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"expected {size} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("function values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexFunction:
    domain: PointSpace
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, len(self.domain)))

    @classmethod
    def from_mapping(cls, domain: PointSpace, mapping: Mapping[str, complex]) -> "ComplexFunction":
        missing = [p for p in domain if p not in mapping]
        if missing:
            raise ValueError(f"no value given for points {missing}")
        return cls(domain, [mapping[p] for p in domain])

    @classmethod
    def zeros(cls, domain: PointSpace) -> "ComplexFunction":
        return cls(domain, np.zeros(len(domain)))

    @classmethod
    def indicator(cls, domain: PointSpace, point: str, scale: complex = 1.0) -> "ComplexFunction":
        vals = np.zeros(len(domain), dtype=np.complex128)
        vals[domain.index(point)] = scale
        return cls(domain, vals)

    def __call__(self, point: str) -> complex:
        return complex(self.values[self.domain.index(point)])

    def with_values(self, values) -> "ComplexFunction":
        return ComplexFunction(self.domain, values)

    def norm(self) -> float:
        return sup_norm(self)

    def __eq__(self, other):
        if not isinstance(other, ComplexFunction):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.domain, self.values.tobytes()))

    def __repr__(self):
        body = ", ".join(f"{p}: {complex(v):.6g}" for p, v in zip(self.domain, self.values))
        return f"ComplexFunction({{{body}}})"


@dataclass(frozen=True)
class PointEvaluation:
    """Evaluation at a point, optionally followed by complex conjugation."""

    point: str
    conjugated: bool = False

    def __call__(self, f: ComplexFunction) -> complex:
        if self.point not in f.domain:
            raise KeyError(f"point {self.point!r} not in the function's domain")
        v = f(self.point)
        return v.conjugate() if self.conjugated else v

    def to_json(self) -> dict:
        return {"point": self.point, "conjugated": self.conjugated}


def sup_norm(f: ComplexFunction) -> float:
    return float(np.max(np.abs(f.values)))


def unit_level_set(f: ComplexFunction, tol: float = 0.0) -> list[str]:
    """Points where ``|f|`` equals 1 up to ``tol``, in domain order."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    hits = np.abs(np.abs(f.values) - 1.0) <= tol
    return [p for p, h in zip(f.domain, hits) if h]


def sphere_check(f: ComplexFunction, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return abs(sup_norm(f) - 1.0) <= tol


# -- array helpers used across the package -----------------------------------

def row_norms(values: np.ndarray) -> np.ndarray:
    """Supremum norm of each row of a ``(..., m)`` array."""
    return np.max(np.abs(values), axis=-1)


def random_ball(rng: np.random.Generator, count: int, size: int) -> np.ndarray:
    """Points drawn uniformly from the closed unit disk, shape ``(count, size)``."""
    radius = np.sqrt(rng.random((count, size)))
    angle = rng.random((count, size)) * 2 * np.pi
    return radius * np.exp(1j * angle)


def random_sphere(rng: np.random.Generator, count: int, size: int) -> np.ndarray:
    """Random elements of the unit sphere of ``l_inf^size(C)``.

    Each row is a random ball element rescaled so its largest modulus is 1;
    one random coordinate is additionally forced onto the unit circle with
    probability 1/2 so that ties at the norm are exercised.
    """
    vals = random_ball(rng, count, size)
    norms = row_norms(vals)
    norms[norms == 0] = 1.0
    vals = vals / norms[:, None]
    tie = rng.random(count) < 0.5
    if size > 1 and np.any(tie):
        idx = rng.integers(0, size, count)
        phase = np.exp(2j * np.pi * rng.random(count))
        rows = np.nonzero(tie)[0]
        vals[rows, idx[rows]] = phase[rows]
    return vals


def unit_roots(m: int) -> np.ndarray:
    """The m-th roots of unity ``exp(2 pi i k / m)``, with exact values at quarter turns."""
    k = np.arange(m)
    roots = np.exp(2j * np.pi * k / m)
    if m % 4 == 0:
        q = m // 4
        roots[0::q] = [1, 1j, -1, -1j]
    return roots


# -- serialization ------------------------------------------------------------

def _pair(value: complex) -> list[float]:
    return [float(value.real), float(value.imag)]


def _parse_pairs(raw, name: str) -> list[complex]:
    if not isinstance(raw, list):
        raise ParseError(name, "expected a list of [re, im] pairs")
    out = []
    for i, item in enumerate(raw):
        where = f"{name}[{i}]"
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ParseError(where, "expected a [re, im] pair")
        re, im = item
        if isinstance(re, bool) or isinstance(im, bool) or not all(
            isinstance(v, (int, float)) for v in (re, im)
        ):
            raise ParseError(where, "components must be numbers")
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ParseError(where, "components must be finite")
        out.append(complex(re, im))
    return out


def function_to_json(f: ComplexFunction) -> dict:
    return {"domain": list(f.domain.points), "values": [_pair(v) for v in f.values]}


def function_from_json(data) -> ComplexFunction:
    if not isinstance(data, dict):
        raise ParseError("<root>", "expected an object")
    for key in ("domain", "values"):
        if key not in data:
            raise ParseError(key, "missing")
    domain = data["domain"]
    if not isinstance(domain, list) or not all(isinstance(p, str) for p in domain):
        raise ParseError("domain", "expected a list of point identifiers")
    try:
        space = PointSpace(tuple(domain))
    except ValueError as exc:
        raise ParseError("domain", str(exc)) from None
    values = _parse_pairs(data["values"], "values")
    if len(values) != len(space):
        raise ParseError("values", f"expected {len(space)} entries, got {len(values)}")
    return ComplexFunction(space, values)


def serialize(f: ComplexFunction) -> str:
    return json.dumps(function_to_json(f))


def load_json(text: str):
    """``json.loads`` that refuses NaN/Infinity literals."""

    def _reject(token):
        raise ParseError("<json>", f"non-finite literal {token}")

    try:
        return json.loads(text, parse_constant=_reject)
    except json.JSONDecodeError as exc:
        raise ParseError("<json>", str(exc)) from None


def deserialize(text: str) -> ComplexFunction:
    return function_from_json(load_json(text))


def pairs_to_complex(raw, name: str) -> list[complex]:
    return _parse_pairs(raw, name)


def complex_to_pairs(values: Sequence[complex]) -> list[list[float]]:
    return [_pair(complex(v)) for v in values]

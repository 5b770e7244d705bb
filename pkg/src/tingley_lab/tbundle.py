"""Finite principal bundles over the n-th roots of unity and their equivariant functions.

The circle is replaced by the cyclic group C_n = {w^k}, w = exp(2 pi i / n),
acting freely on ``base x Z_n``: the point ``(orbit, k)`` stands for
``w^k t_orbit``.  An equivariant function ``a(lam t) = lam a(t)`` is determined
by its values on the ``k = 0`` transversal, which is how it is stored.
Function values stay fully complex; only the acting group is discrete.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .core_model import (
    DEFAULT_TOL,
    IDENTITY_TOL,
    ComplexFunction,
    PointSpace,
    ParseError,
    complex_to_pairs,
    pairs_to_complex,
    random_ball,
    row_norms,
    unit_roots,
)


class BundlePoint(NamedTuple):
    orbit: str
    k: int

    def label(self) -> str:
        return f"{self.orbit}@{self.k}"


@dataclass(frozen=True)
class FiniteTBundle:
    n: int
    base: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        base = tuple(str(b) for b in self.base)
        if not base:
            raise ValueError("a bundle needs at least one orbit")
        if len(set(base)) != len(base):
            raise ValueError("orbit identifiers must be distinct")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "_index", {b: i for i, b in enumerate(base)})

    @property
    def omega(self) -> complex:
        return complex(unit_roots(self.n)[1 % self.n]) if self.n > 1 else 1.0 + 0j

    def root(self, k: int) -> complex:
        return complex(unit_roots(self.n)[k % self.n])

    def orbit_index(self, orbit: str) -> int:
        try:
            return self._index[orbit]
        except KeyError:
            raise KeyError(f"orbit {orbit!r} not in bundle") from None

    def points(self) -> list[BundlePoint]:
        return [BundlePoint(b, k) for b in self.base for k in range(self.n)]

    def point_space(self) -> PointSpace:
        return PointSpace(tuple(p.label() for p in self.points()))

    def point(self, orbit: str, k: int = 0) -> BundlePoint:
        self.orbit_index(orbit)
        return BundlePoint(orbit, k % self.n)

    def parse_point(self, label: str) -> BundlePoint:
        orbit, _, k = label.rpartition("@")
        return self.point(orbit, int(k))

    def act(self, j: int, t: BundlePoint) -> BundlePoint:
        """Multiply ``t`` by ``w^j``."""
        return BundlePoint(t.orbit, (t.k + j) % self.n)

    def orbit_of(self, t: BundlePoint) -> list[BundlePoint]:
        return [BundlePoint(t.orbit, k) for k in range(self.n)]

    def to_json(self) -> dict:
        return {"n": self.n, "base": list(self.base)}

    @classmethod
    def from_json(cls, data) -> "FiniteTBundle":
        if not isinstance(data, dict):
            raise ParseError("bundle", "expected an object")
        n, base = data.get("n"), data.get("base")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ParseError("n", "expected a positive integer")
        if not isinstance(base, list) or not base or not all(isinstance(b, str) for b in base):
            raise ParseError("base", "expected a non-empty list of orbit identifiers")
        try:
            return cls(n, tuple(base))
        except ValueError as exc:
            raise ParseError("base", str(exc)) from None


@dataclass(frozen=True, eq=False)
class EquivariantFunction:
    bundle: FiniteTBundle
    base_values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.base_values, dtype=np.complex128).reshape(-1)
        if arr.shape[0] != len(self.bundle.base):
            raise ValueError(f"expected {len(self.bundle.base)} base values, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "base_values", arr)

    def __call__(self, t: BundlePoint) -> complex:
        i = self.bundle.orbit_index(t.orbit)
        return self.bundle.root(t.k) * complex(self.base_values[i])

    def total_values(self) -> np.ndarray:
        """Values on every point, shape ``(orbits, n)``; column ``k`` is ``w^k * base``."""
        return self.base_values[:, None] * unit_roots(self.bundle.n)[None, :]

    def as_function(self) -> ComplexFunction:
        return ComplexFunction(self.bundle.point_space(), self.total_values().reshape(-1))

    def norm(self) -> float:
        return float(np.max(np.abs(self.base_values)))

    def with_base(self, values) -> "EquivariantFunction":
        return EquivariantFunction(self.bundle, values)

    def __eq__(self, other):
        if not isinstance(other, EquivariantFunction):
            return NotImplemented
        return self.bundle == other.bundle and np.array_equal(self.base_values, other.base_values)

    def __hash__(self):
        return hash((self.bundle, self.base_values.tobytes()))

    def to_json(self) -> dict:
        return {"base_values": complex_to_pairs(self.base_values)}

    @classmethod
    def from_json(cls, bundle: FiniteTBundle, data) -> "EquivariantFunction":
        if not isinstance(data, dict) or "base_values" not in data:
            raise ParseError("base_values", "missing")
        vals = pairs_to_complex(data["base_values"], "base_values")
        if len(vals) != len(bundle.base):
            raise ParseError("base_values", f"expected {len(bundle.base)} entries")
        return cls(bundle, vals)


def is_equivariant(bundle: FiniteTBundle, values: np.ndarray, tol: float = IDENTITY_TOL) -> bool:
    """Check ``a(w t) = w a(t)`` on a total-value array of shape ``(orbits, n)``."""
    expected = values[:, :1] * unit_roots(bundle.n)[None, :]
    return bool(np.all(np.abs(values - expected) <= tol))


# -- Haar projection ----------------------------------------------------------

def haar_project_values(bundle: FiniteTBundle, values: np.ndarray) -> np.ndarray:
    """Average ``w^-j a(w^j t)`` over the group; input ``(..., orbits, n)``, output ``(..., orbits)``."""
    values = np.asarray(values, dtype=np.complex128)
    if values.shape[-2:] != (len(bundle.base), bundle.n):
        raise ValueError("values do not match the bundle's points")
    return np.mean(values * np.conj(unit_roots(bundle.n)), axis=-1)


def haar_projection(bundle: FiniteTBundle, a: ComplexFunction) -> EquivariantFunction:
    if a.domain != bundle.point_space():
        raise ValueError("function domain does not match the bundle's points")
    vals = a.values.reshape(len(bundle.base), bundle.n)
    return EquivariantFunction(bundle, haar_project_values(bundle, vals))


# -- triple product and functional calculus -----------------------------------

def _same_bundle(*fs: EquivariantFunction) -> FiniteTBundle:
    b = fs[0].bundle
    if any(f.bundle != b for f in fs[1:]):
        raise ValueError("functions live on different bundles")
    return b


def triple_product(a: EquivariantFunction, b: EquivariantFunction, c: EquivariantFunction) -> EquivariantFunction:
    """Pointwise ``a * conj(b) * c``."""
    bundle = _same_bundle(a, b, c)
    return EquivariantFunction(bundle, a.base_values * np.conj(b.base_values) * c.base_values)


def odd_power(a: EquivariantFunction, m: int) -> EquivariantFunction:
    """``a^[2m+1]``, built by the recursion ``{a, a, a^[2m-1]}``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    out = a
    for _ in range(m):
        out = triple_product(a, a, out)
    return out


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Piecewise-linear ``g`` on [0, 1] with ``g(0) = 0``; induces ``zeta -> phase(zeta) g(|zeta|)``."""

    s: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if s.shape != g.shape or s.size < 2:
            raise ValueError("need at least two matching breakpoints")
        if s[0] != 0 or s[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(s) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if g[0] != 0:
            raise ValueError("profile must vanish at 0")
        s.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "g", g)

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "RadialProfile":
        pts = sorted(points)
        merged: list[tuple[float, float]] = []
        for s, g in pts:
            if merged and abs(s - merged[-1][0]) <= 1e-15:
                if abs(g - merged[-1][1]) > 1e-12:
                    raise ValueError(f"conflicting profile values at s={s}")
                continue
            merged.append((s, g))
        return cls([p[0] for p in merged], [p[1] for p in merged])

    @classmethod
    def identity(cls) -> "RadialProfile":
        return cls([0.0, 1.0], [0.0, 1.0])

    def __call__(self, s):
        return np.interp(s, self.s, self.g)

    def sup(self) -> float:
        return float(np.max(np.abs(self.g)))

    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.s.tolist(), self.g.tolist()))


@dataclass(frozen=True)
class PowerProfile:
    """``s -> s^(2m+1)``, the radial part of ``zeta -> |zeta|^(2m) zeta`` (not piecewise-linear)."""

    m: int

    def __call__(self, s):
        return np.asarray(s, dtype=float) ** (2 * self.m + 1)


def functional_calculus(
    g: Callable, a: EquivariantFunction, tol: float = DEFAULT_TOL
) -> EquivariantFunction:
    """Compose ``a`` with the disk map induced by the radial profile ``g``."""
    if a.norm() > 1 + tol:
        raise ValueError("functional calculus needs ||a|| <= 1")
    v = a.base_values
    mod = np.abs(v)
    phase = np.where(mod > 0, np.exp(1j * np.angle(v)), 0)
    return a.with_base(phase * g(np.minimum(mod, 1.0)))


def threshold_profile(delta: float) -> RadialProfile:
    """0 on ``[0, delta]``, 1 at 1, affine in between."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    if delta == 0:
        return RadialProfile.identity()
    return RadialProfile([0.0, delta, 1.0], [0.0, 0.0, 1.0])


def lemma33_split(g: RadialProfile, eps: float) -> tuple[RadialProfile, RadialProfile]:
    """Profiles ``f_eps`` and ``g_eps`` with ``(1 - eps/2) g_eps + (eps/2) f_eps = identity``.

    ``f_eps`` is 0 up to ``eps/2``, follows ``g`` on ``[eps, 1 - eps]`` and is 1 from
    ``1 - eps/2`` on, with linear pieces in between.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if abs(g(1.0) - 1.0) > IDENTITY_TOL:
        raise ValueError("g must equal 1 at 1")
    inner = [(s, float(v)) for s, v in g.breakpoints() if eps < s < 1 - eps]
    pts = (
        [(0.0, 0.0), (eps / 2, 0.0), (eps, float(g(eps)))]
        + inner
        + [(1 - eps, float(g(1 - eps))), (1 - eps / 2, 1.0), (1.0, 1.0)]
    )
    f_eps = RadialProfile.from_points(pts)
    s = f_eps.s
    g_eps = RadialProfile(s, (s - eps / 2 * f_eps.g) / (1 - eps / 2))
    return f_eps, g_eps


def lemma316_profile(abs_a0: float, eps: float) -> RadialProfile:
    """``h_eps``: identity except for a dip to ``|a(t0)| - eps/2`` at ``|a(t0)| + eps/2``."""
    c = abs_a0
    if c == 0:
        return RadialProfile([0.0, eps / 2, eps, 1.0], [0.0, 0.0, eps, 1.0])
    pts = [(0.0, 0.0), (c, c), (c + eps / 2, c - eps / 2), (c + eps, c + eps), (1.0, 1.0)]
    return RadialProfile.from_points(pts)


# -- faces, Urysohn functions, transversals ------------------------------------

@dataclass(frozen=True)
class FaceDescriptor3:
    """Labels the face ``F_{t0, mu} = {a : ||a|| <= 1, a(t0) = mu}``."""

    t0: BundlePoint
    mu: complex

    def __post_init__(self):
        if abs(abs(self.mu) - 1) > IDENTITY_TOL:
            raise ValueError("face phase must be unimodular")


def face_membership_3(a: EquivariantFunction, d: FaceDescriptor3, tol: float = DEFAULT_TOL) -> bool:
    return a.norm() <= 1 + tol and abs(a(d.t0) - d.mu) <= tol


def nonoverlap_transversal(bundle: FiniteTBundle) -> list[BundlePoint]:
    """One representative (``k = 0``) per orbit."""
    return [BundlePoint(b, 0) for b in bundle.base]


def is_non_overlapping(bundle: FiniteTBundle, points: Iterable[BundlePoint]) -> bool:
    pts = list(points)
    orbits = [p.orbit for p in pts]
    return len(set(orbits)) == len(orbits)


def decompose(bundle: FiniteTBundle, t: BundlePoint) -> tuple[BundlePoint, complex]:
    """Write ``t = mu * t0`` with ``t0`` on the transversal."""
    return BundlePoint(t.orbit, 0), bundle.root(t.k)


def canonical_face_label(bundle: FiniteTBundle, t: BundlePoint, mu: complex) -> FaceDescriptor3:
    """``F_{nu t0, mu} = F_{t0, conj(nu) mu}`` with ``t0`` on the transversal."""
    t0, nu = decompose(bundle, t)
    return FaceDescriptor3(t0, complex(np.conj(nu) * mu))


def _is_invariant(bundle: FiniteTBundle, W: set[BundlePoint]) -> bool:
    return all(bundle.act(1, t) in W for t in W)


def urysohn_equivariant(
    bundle: FiniteTBundle, t0: BundlePoint, W: Iterable[BundlePoint], mu: complex = 1.0
) -> EquivariantFunction:
    """Equivariant ``h`` with ``h(t0) = mu``, ``||h|| = 1`` and ``h = 0`` off ``W``.

    Built the long way: prescribe ``lam t0 -> lam mu`` on the orbit and 0
    elsewhere (a continuous extension on a discrete space), then project with
    the Haar average.
    """
    W = {BundlePoint(p.orbit, p.k % bundle.n) for p in W}
    t0 = bundle.point(t0.orbit, t0.k)
    if not _is_invariant(bundle, W):
        raise ValueError("W must be invariant under the group action")
    if t0 not in W:
        raise ValueError("W must contain the orbit of t0")
    if abs(abs(mu) - 1) > IDENTITY_TOL:
        raise ValueError("mu must be unimodular")
    raw = np.zeros((len(bundle.base), bundle.n), dtype=np.complex128)
    i = bundle.orbit_index(t0.orbit)
    for j in range(bundle.n):
        # the point w^j t0 gets w^j mu
        raw[i, (t0.k + j) % bundle.n] = bundle.root(j) * mu
    return EquivariantFunction(bundle, haar_project_values(bundle, raw))


def orbit_union(bundle: FiniteTBundle, orbits: Iterable[str]) -> set[BundlePoint]:
    return {BundlePoint(o, k) for o in orbits for k in range(bundle.n)}


def face_approximation_pair(
    a: EquivariantFunction, t0: BundlePoint, eps: float, tol: float = DEFAULT_TOL
) -> tuple[EquivariantFunction, EquivariantFunction]:
    """Approximant ``a_eps`` of ``a`` and a bump ``b_eps in F_{t0,1}`` that combine into the face at ``t0``.

    For every ``0 < r < 1``, ``r a_eps + (1 - r|a(t0)|) lam b_eps`` lies in
    ``F_{t0, lam}`` with ``lam`` the phase of ``a(t0)``.
    """
    bundle = a.bundle
    c = abs(a(t0))
    if abs(a.norm() - 1) > tol:
        raise ValueError("a must lie on the unit sphere")
    if c >= 1:
        raise ValueError("|a(t0)| must be < 1")
    if eps <= 0 or c + eps >= 1:
        raise ValueError("need eps > 0 and |a(t0)| + eps < 1")
    profile = lemma316_profile(c, eps)
    a_eps = functional_calculus(profile, a)
    mods = np.abs(a.base_values)
    # on orbits where a is this small, a_eps is either 0 (c = 0) or at most c
    bound = c + eps / 2
    W_orbits = [o for o, m in zip(bundle.base, mods) if m < bound]
    b_eps = urysohn_equivariant(bundle, t0, orbit_union(bundle, W_orbits), 1.0)
    return a_eps, b_eps


@dataclass(frozen=True, eq=False)
class MSummand:
    orbits: frozenset[str]
    projection: np.ndarray  # diagonal 0/1 matrix on base coordinates


def enumerate_m_summands(bundle: FiniteTBundle) -> list[MSummand]:
    """All invariant subsets (orbit unions) with their restriction projections."""
    m = len(bundle.base)
    out = []
    for mask in range(2**m):
        chosen = [bundle.base[i] for i in range(m) if mask >> i & 1]
        diag = np.array([1.0 if mask >> i & 1 else 0.0 for i in range(m)], dtype=np.complex128)
        out.append(MSummand(frozenset(chosen), np.diag(diag)))
    return out


def m_projection_check(
    bundle: FiniteTBundle,
    P: np.ndarray,
    samples: int = 100,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> tuple[bool, frozenset[str] | None]:
    """Test ``||a|| = max(||Pa||, ||a - Pa||)`` on the basis and random samples.

    ``P`` acts on base-value vectors (columns are images of the orbit
    indicators).  On success the matching invariant subset is returned.
    """
    P = np.asarray(P, dtype=np.complex128)
    m = len(bundle.base)
    if P.shape != (m, m):
        raise ValueError(f"P must be {m}x{m}")
    if np.max(np.abs(P @ P - P), initial=0.0) > tol:
        raise ValueError("P is not idempotent")
    rng = np.random.default_rng(seed)
    tests = np.vstack([np.eye(m, dtype=np.complex128), random_ball(rng, samples, m)])
    Pa = tests @ P.T
    lhs = row_norms(tests)
    rhs = np.maximum(row_norms(Pa), row_norms(tests - Pa))
    if np.max(np.abs(lhs - rhs)) > tol:
        return False, None
    for summand in enumerate_m_summands(bundle):
        if np.max(np.abs(summand.projection - P)) <= tol:
            return True, summand.orbits
    # an M-projection that is not a restriction would contradict the classification
    return True, None

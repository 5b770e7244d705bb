"""Ground-truth sphere isometries built from weighted composition formulas.

Both settings reduce to coordinates in l_inf^m(C): a function on a finite
space is its value vector, and an equivariant function on a bundle is its
vector of base (transversal) values.  Maps act on batches of such vectors,
shape ``(k, m)``.

Setting 2 (functions on a finite space)::

    T(f)(y) = kappa(y) f(phi(y))          for y in K
    T(f)(y) = kappa(y) conj(f(phi(y)))    otherwise

Setting 3 (equivariant functions): ``phi`` sends each Y orbit to an X orbit
together with an offset ``k``, meaning the representative of the Y orbit is
sent to ``w^k`` times the representative of the X orbit.  On orbits mapped
into ``D`` the map is ``a -> a o phi``.  On the rest it is the base value
``conj(a(phi(s0)))``, extended equivariantly; plain pointwise conjugation would
not produce an equivariant function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core_model import (
    DEFAULT_TOL,
    IDENTITY_TOL,
    ParseError,
    PointSpace,
    complex_to_pairs,
    pairs_to_complex,
    random_ball,
    random_sphere,
    row_norms,
    unit_roots,
)
from .tbundle import BundlePoint, FiniteTBundle

SPHERE_TOL = 1e-9


# -- specifications -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WcoSpec2:
    X: PointSpace
    Y: PointSpace
    kappa: np.ndarray
    K: frozenset[str]
    phi: Mapping[str, str]

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=np.complex128).reshape(-1)
        if kappa.shape[0] != len(self.Y):
            raise ValueError(f"kappa needs one value per point of Y ({len(self.Y)})")
        if np.any(np.abs(np.abs(kappa) - 1) > IDENTITY_TOL):
            raise ValueError("kappa must be unimodular")
        kappa.setflags(write=False)
        K = frozenset(self.K)
        if not K <= set(self.Y.points):
            raise ValueError("K must be a subset of Y")
        phi = dict(self.phi)
        if set(phi) != set(self.Y.points):
            raise ValueError("phi must be defined on every point of Y")
        if sorted(phi.values()) != sorted(self.X.points):
            raise ValueError("phi must be a bijection onto X")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "phi", phi)

    @property
    def index_map(self) -> np.ndarray:
        """``index_map[j]`` is the X index of ``phi(Y[j])``."""
        return np.array([self.X.index(self.phi[y]) for y in self.Y])

    @property
    def linear_mask(self) -> np.ndarray:
        return np.array([y in self.K for y in self.Y])

    def same_as(self, other: "WcoSpec2", tol: float = DEFAULT_TOL) -> bool:
        return (
            self.X == other.X
            and self.Y == other.Y
            and self.K == other.K
            and self.phi == other.phi
            and bool(np.max(np.abs(self.kappa - other.kappa)) <= tol)
        )

    def to_json(self) -> dict:
        return {
            "kappa": complex_to_pairs(self.kappa),
            "K": [y for y in self.Y if y in self.K],
            "phi": {y: self.phi[y] for y in self.Y},
        }

    @classmethod
    def from_json(cls, X: PointSpace, Y: PointSpace, data) -> "WcoSpec2":
        if not isinstance(data, dict):
            raise ParseError("spec", "expected an object")
        for key in ("kappa", "K", "phi"):
            if key not in data:
                raise ParseError(key, "missing")
        kappa = pairs_to_complex(data["kappa"], "kappa")
        K, phi = data["K"], data["phi"]
        if not isinstance(K, list) or not all(isinstance(y, str) for y in K):
            raise ParseError("K", "expected a list of points")
        if not isinstance(phi, dict) or not all(isinstance(v, str) for v in phi.values()):
            raise ParseError("phi", "expected a point-to-point object")
        try:
            return cls(X, Y, kappa, frozenset(K), phi)
        except ValueError as exc:
            raise ParseError("spec", str(exc)) from None


@dataclass(frozen=True, eq=False)
class WcoSpec3:
    X: FiniteTBundle
    Y: FiniteTBundle
    D: frozenset[str]
    phi: Mapping[str, tuple[str, int]]

    def __post_init__(self):
        if self.X.n != self.Y.n:
            raise ValueError("both bundles must carry the same group")
        D = frozenset(self.D)
        if not D <= set(self.X.base):
            raise ValueError("D must be a union of X orbits")
        phi = {}
        for s, target in dict(self.phi).items():
            orbit, k = (target, 0) if isinstance(target, str) else target
            phi[s] = (orbit, int(k) % self.X.n)
        if set(phi) != set(self.Y.base):
            raise ValueError("phi must be defined on every Y orbit")
        if sorted(o for o, _ in phi.values()) != sorted(self.X.base):
            raise ValueError("phi must be a bijection onto the X orbits")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_point_map(
        cls,
        X: FiniteTBundle,
        Y: FiniteTBundle,
        D,
        mapping: Mapping[BundlePoint, BundlePoint],
    ) -> "WcoSpec3":
        """Build from a full point map, checking invariance, bijectivity and equivariance exhaustively."""
        D = frozenset(D)
        points_Y = Y.points()
        if set(mapping) != set(points_Y):
            raise ValueError("mapping must be defined on every point of Y")
        if sorted(mapping.values()) != sorted(X.points()):
            raise ValueError("mapping must be a bijection onto the points of X")
        for s in points_Y:
            for j in range(Y.n):
                if mapping[Y.act(j, s)] != X.act(j, mapping[s]):
                    raise ValueError(f"mapping is not equivariant at {s.label()}")
        phi = {s: (mapping[BundlePoint(s, 0)].orbit, mapping[BundlePoint(s, 0)].k) for s in Y.base}
        return cls(X, Y, D, phi)

    def point_map(self) -> dict[BundlePoint, BundlePoint]:
        out = {}
        for s, (orbit, k) in self.phi.items():
            for j in range(self.Y.n):
                out[BundlePoint(s, j)] = BundlePoint(orbit, (k + j) % self.X.n)
        return out

    @property
    def D_tilde(self) -> frozenset[str]:
        """Y orbits sent into ``D``."""
        return frozenset(s for s, (o, _) in self.phi.items() if o in self.D)

    @property
    def index_map(self) -> np.ndarray:
        return np.array([self.X.orbit_index(self.phi[s][0]) for s in self.Y.base])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([self.phi[s][1] for s in self.Y.base])

    @property
    def linear_mask(self) -> np.ndarray:
        return np.array([s in self.D_tilde for s in self.Y.base])

    def same_as(self, other: "WcoSpec3") -> bool:
        return self.X == other.X and self.Y == other.Y and self.D == other.D and self.phi == other.phi

    def to_json(self) -> dict:
        return {
            "D": [t for t in self.X.base if t in self.D],
            "phi": {s: self.phi[s][0] for s in self.Y.base},
            "offset": {s: self.phi[s][1] for s in self.Y.base},
        }

    @classmethod
    def from_json(cls, X: FiniteTBundle, Y: FiniteTBundle, data) -> "WcoSpec3":
        if not isinstance(data, dict):
            raise ParseError("spec", "expected an object")
        for key in ("D", "phi"):
            if key not in data:
                raise ParseError(key, "missing")
        D, phi = data["D"], data["phi"]
        offset = data.get("offset", {})
        if not isinstance(D, list) or not all(isinstance(t, str) for t in D):
            raise ParseError("D", "expected a list of orbits")
        if not isinstance(phi, dict) or not all(isinstance(v, str) for v in phi.values()):
            raise ParseError("phi", "expected an orbit-to-orbit object")
        if not isinstance(offset, dict) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in offset.values()
        ):
            raise ParseError("offset", "expected integer offsets")
        try:
            return cls(X, Y, frozenset(D), {s: (o, offset.get(s, 0)) for s, o in phi.items()})
        except ValueError as exc:
            raise ParseError("spec", str(exc)) from None


# -- linear maps ------------------------------------------------------------------

def _batch(values) -> tuple[np.ndarray, bool]:
    arr = np.asarray(values, dtype=np.complex128)
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


def _unbatch(arr: np.ndarray, single: bool) -> np.ndarray:
    return arr[0] if single else arr


def wco2_maps(spec: WcoSpec2) -> tuple[Callable, Callable]:
    idx, mask, kappa = spec.index_map, spec.linear_mask, spec.kappa
    inv_idx = np.argsort(idx)

    def forward(values):
        F, single = _batch(values)
        G = F[:, idx]
        G = np.where(mask, G, np.conj(G)) * kappa
        return _unbatch(G, single)

    def inverse(values):
        U, single = _batch(values)
        pulled = np.where(mask, np.conj(kappa) * U, kappa * np.conj(U))
        return _unbatch(pulled[:, inv_idx], single)

    return forward, inverse


def wco3_maps(spec: WcoSpec3) -> tuple[Callable, Callable]:
    idx, mask = spec.index_map, spec.linear_mask
    rot = unit_roots(spec.X.n)[spec.offsets]
    inv_idx = np.argsort(idx)

    def forward(values):
        B, single = _batch(values)
        G = rot * B[:, idx]
        G = np.where(mask, G, np.conj(G))
        return _unbatch(G, single)

    def inverse(values):
        U, single = _batch(values)
        pulled = np.where(mask, np.conj(rot) * U, np.conj(rot * U))
        return _unbatch(pulled[:, inv_idx], single)

    return forward, inverse


# -- oracles ----------------------------------------------------------------------

def _coordinates(space) -> tuple[str, ...]:
    return space.base if isinstance(space, FiniteTBundle) else space.points


@dataclass(frozen=True, eq=False)
class SphereIsometryOracle:
    """A pair of maps between unit spheres, queried on coordinate vectors.

    Inputs off the unit sphere are rejected.  The maps are never assumed to
    be mutually inverse; ``verify_isometry`` spot-checks that.
    """

    section: int
    domain: object
    codomain: object
    forward_map: Callable
    inverse_map: Callable
    metadata: dict = field(default_factory=dict)
    sphere_tol: float = SPHERE_TOL

    @property
    def domain_coords(self) -> tuple[str, ...]:
        return _coordinates(self.domain)

    @property
    def codomain_coords(self) -> tuple[str, ...]:
        return _coordinates(self.codomain)

    def _check(self, F: np.ndarray, size: int, where: str) -> None:
        if F.shape[-1] != size:
            raise ValueError(f"{where} expects vectors of length {size}")
        if F.size and np.max(np.abs(row_norms(F) - 1.0)) > self.sphere_tol:
            raise ValueError(f"{where} input is not on the unit sphere")

    def forward(self, values) -> np.ndarray:
        F, single = _batch(values)
        self._check(F, len(self.domain_coords), "forward")
        return _unbatch(np.asarray(self.forward_map(F)), single)

    def inverse(self, values) -> np.ndarray:
        U, single = _batch(values)
        self._check(U, len(self.codomain_coords), "inverse")
        return _unbatch(np.asarray(self.inverse_map(U)), single)

    __call__ = forward

    def inverted(self) -> "SphereIsometryOracle":
        meta = dict(self.metadata, inverted=not self.metadata.get("inverted", False))
        return SphereIsometryOracle(
            self.section, self.codomain, self.domain, self.inverse_map, self.forward_map, meta, self.sphere_tol
        )


def _check_isometric(forward: Callable, size: int, seed: int, count: int = 64) -> None:
    rng = np.random.default_rng(seed)
    f, g = random_ball(rng, count, size), random_ball(rng, count, size)
    dev = np.abs(row_norms(forward(f) - forward(g)) - row_norms(f - g))
    if np.max(dev) > 1e-12:
        raise ValueError("constructed map is not isometric")


def build_wco_2(spec: WcoSpec2, metadata: dict | None = None) -> tuple[Callable, SphereIsometryOracle]:
    forward, inverse = wco2_maps(spec)
    _check_isometric(forward, len(spec.X), seed=0)
    oracle = SphereIsometryOracle(2, spec.X, spec.Y, forward, inverse, dict(metadata or {}))
    return forward, oracle


def build_wco_3(spec: WcoSpec3, metadata: dict | None = None) -> tuple[Callable, SphereIsometryOracle]:
    forward, inverse = wco3_maps(spec)
    _check_isometric(forward, len(spec.X.base), seed=0)
    oracle = SphereIsometryOracle(3, spec.X, spec.Y, forward, inverse, dict(metadata or {}))
    return forward, oracle


def identity_oracle(space) -> SphereIsometryOracle:
    ident = lambda v: np.array(v, dtype=np.complex128)  # noqa: E731
    section = 3 if isinstance(space, FiniteTBundle) else 2
    return SphereIsometryOracle(section, space, space, ident, ident, {"instance": "identity"})


# -- random instances ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Instance:
    section: int
    spec: object
    T: Callable
    oracle: SphereIsometryOracle
    seed: int | None

    @property
    def domain(self):
        return self.spec.X

    @property
    def codomain(self):
        return self.spec.Y

    def to_json(self) -> dict:
        if self.section == 2:
            spaces = {"X": list(self.spec.X.points), "Y": list(self.spec.Y.points)}
        else:
            spaces = {"n": self.spec.X.n, "X": list(self.spec.X.base), "Y": list(self.spec.Y.base)}
        return {"section": self.section, "seed": self.seed, **spaces, "spec": self.spec.to_json()}


def make_instance(spec, seed: int | None = None) -> Instance:
    meta = {"instance": f"s{2 if isinstance(spec, WcoSpec2) else 3}-{seed}", "seed": seed}
    if isinstance(spec, WcoSpec2):
        T, oracle = build_wco_2(spec, meta)
        return Instance(2, spec, T, oracle, seed)
    T, oracle = build_wco_3(spec, meta)
    return Instance(3, spec, T, oracle, seed)


def instance_from_json(data) -> Instance:
    if not isinstance(data, dict):
        raise ParseError("<root>", "expected an object")
    section = data.get("section")
    if section not in (2, 3):
        raise ParseError("section", "expected 2 or 3")
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ParseError("seed", "expected an integer or null")
    for key in ("X", "Y", "spec"):
        if key not in data:
            raise ParseError(key, "missing")
    for key in ("X", "Y"):
        if not isinstance(data[key], list) or not all(isinstance(p, str) for p in data[key]):
            raise ParseError(key, "expected a list of identifiers")
    try:
        if section == 2:
            X, Y = PointSpace(tuple(data["X"])), PointSpace(tuple(data["Y"]))
            spec = WcoSpec2.from_json(X, Y, data["spec"])
        else:
            n = data.get("n")
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ParseError("n", "expected a positive integer")
            if n % 4:
                raise ParseError("n", "must be a multiple of 4")
            X, Y = FiniteTBundle(n, tuple(data["X"])), FiniteTBundle(n, tuple(data["Y"]))
            spec = WcoSpec3.from_json(X, Y, data["spec"])
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError("spaces", str(exc)) from None
    return make_instance(spec, seed)


def random_instance(
    section: int,
    size: int = 3,
    seed: int = 0,
    n: int = 4,
    continuous_kappa: bool = False,
    kappa_order: int = 16,
) -> Instance:
    """Seeded random instance: ``size`` points (setting 2) or ``size`` orbits of ``n`` points (setting 3)."""
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = np.random.default_rng(seed)
    if section == 2:
        X = PointSpace(tuple(f"x{i}" for i in range(size)))
        Y = PointSpace(tuple(f"y{i}" for i in range(size)))
        perm = rng.permutation(size)
        if continuous_kappa:
            kappa = np.exp(2j * np.pi * rng.random(size))
        else:
            kappa = unit_roots(kappa_order)[rng.integers(0, kappa_order, size)]
        K = frozenset(y for y, keep in zip(Y, rng.random(size) < 0.5) if keep)
        phi = {y: X.points[j] for y, j in zip(Y, perm)}
        return make_instance(WcoSpec2(X, Y, kappa, K, phi), seed)
    if section == 3:
        if n < 4 or n % 4:
            raise ValueError("setting 3 needs n divisible by 4")
        X = FiniteTBundle(n, tuple(f"t{i}" for i in range(size)))
        Y = FiniteTBundle(n, tuple(f"s{i}" for i in range(size)))
        perm = rng.permutation(size)
        offsets = rng.integers(0, n, size)
        D = frozenset(t for t, keep in zip(X.base, rng.random(size) < 0.5) if keep)
        phi = {s: (X.base[j], int(k)) for s, j, k in zip(Y.base, perm, offsets)}
        return make_instance(WcoSpec3(X, Y, D, phi), seed)
    raise ValueError("section must be 2 or 3")


# -- corruption and verification -------------------------------------------------------

def perturb_oracle(oracle: SphereIsometryOracle, point, magnitude: float, radius: float = 1e-9) -> SphereIsometryOracle:
    """Copy of ``oracle`` whose forward image of inputs within ``radius`` of ``point`` is shifted.

    The shift adds ``magnitude`` to the smallest-modulus output coordinate.
    When every coordinate is unimodular the shift is tangential instead
    (``v -> v (1 + i magnitude)``), and the row is rescaled back onto the sphere.
    The inverse map is left untouched.
    """
    if not magnitude > 0:
        raise ValueError("magnitude must be positive")
    if magnitude >= 0.5:
        raise ValueError("magnitude must be small")
    site = np.asarray(point, dtype=np.complex128).reshape(-1)
    clean = oracle.forward_map

    def forward(values):
        F = np.atleast_2d(np.asarray(values, dtype=np.complex128))
        out = np.array(clean(F), dtype=np.complex128)
        hit = row_norms(F - site) <= radius
        for r in np.nonzero(hit)[0]:
            row = out[r]
            j = int(np.argmin(np.abs(row)))
            if abs(abs(row[j]) - 1) <= IDENTITY_TOL:
                row[j] *= 1 + 1j * magnitude
            else:
                row[j] += magnitude
            out[r] = row / max(row_norms(row), 1.0)
        return out

    meta = dict(oracle.metadata, perturbed={"magnitude": magnitude})
    return SphereIsometryOracle(
        oracle.section, oracle.domain, oracle.codomain, forward, oracle.inverse_map, meta, oracle.sphere_tol
    )


def _anchor_witnesses(oracle: SphereIsometryOracle, anchors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(p, g)`` where ``Delta(g)`` differs from ``Delta(p)`` in a single coordinate.

    Any corruption of ``Delta(p)`` in that coordinate changes one of these
    distances to first order.
    """
    images = oracle.forward(anchors)
    left, right = [], []
    for p, u in zip(anchors, images):
        for j in range(u.shape[0]):
            phase = u[j] / abs(u[j]) if abs(u[j]) > 0 else 1.0
            for w in (-1.0, 1j, -1j):
                v = u.copy()
                v[j] = w * phase
                left.append(p)
                right.append(v)
    g = oracle.inverse(np.array(right))
    return np.array(left), g


def verify_isometry(
    oracle: SphereIsometryOracle,
    pairs: int = 1000,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    anchors=None,
) -> float:
    """Largest ``| ||Df - Dg|| - ||f - g|| |`` over sampled sphere pairs, with a round-trip check.

    ``anchors`` are extra sphere points (e.g. suspected corruption sites) that
    get paired with targeted witnesses.
    """
    rng = np.random.default_rng(seed)
    m = len(oracle.domain_coords)
    f, g = random_sphere(rng, pairs, m), random_sphere(rng, pairs, m)
    if anchors is not None:
        a = np.atleast_2d(np.asarray(anchors, dtype=np.complex128))
        p, w = _anchor_witnesses(oracle, a)
        f, g = np.vstack([f, p]), np.vstack([g, w])
    dev = np.abs(row_norms(oracle.forward(f) - oracle.forward(g)) - row_norms(f - g))
    worst = float(np.max(dev, initial=0.0))
    u = random_sphere(rng, min(pairs, 256) or 1, len(oracle.codomain_coords))
    round_trip = row_norms(oracle.forward(oracle.inverse(u)) - u)
    return max(worst, float(np.max(round_trip)))

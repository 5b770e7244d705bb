"""The full algebra C(X) on a finite discrete space and its peaking-function toolkit.

On a finite discrete X every subset is open and the only strongly separating
uniformly closed subalgebra of C(X) is C(X) itself, so the Choquet boundary is
all of X.  The constructions below nevertheless follow the general arguments
step by step (neighbourhoods, bands, dyadic series) rather than jumping to
indicator functions, which are kept around as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core_model import (
    DEFAULT_TOL,
    IDENTITY_TOL,
    ComplexFunction,
    PointSpace,
    sphere_check,
    sup_norm,
    unit_level_set,
)


class PreconditionError(ValueError):
    pass


def _is_unimodular(z: complex, tol: float = IDENTITY_TOL) -> bool:
    return abs(abs(z) - 1.0) <= tol


def peaking_defect(values: np.ndarray, tol: float = IDENTITY_TOL) -> float:
    """How far ``values`` is from being a peaking function (0 means it is one).

    Moduli are compared at ``tol``.  Near-unimodular values must sit close to 1,
    but the phase of a value with ``1 - |z| ~ tol`` is only pinned down to order
    ``sqrt(tol)``, so that comparison uses ``4 * sqrt(tol)``.
    """
    mod = np.abs(values)
    defect = abs(float(mod.max()) - 1.0)
    if defect > tol:
        return defect
    near = np.abs(mod - 1.0) <= tol
    spread = float(np.max(np.abs(values[near] - 1.0))) if np.any(near) else 0.0
    return 0.0 if spread <= 4 * math.sqrt(tol) else spread


@dataclass(frozen=True, eq=False)
class PeakingFunction:
    """A norm-one function whose unimodular values all equal 1."""

    f: ComplexFunction

    def __post_init__(self):
        d = peaking_defect(self.f.values)
        if d:
            raise ValueError(f"not a peaking function (defect {d:.3g})")

    @property
    def peak_set(self) -> list[str]:
        return [p for p, v in zip(self.f.domain, self.f.values) if abs(v - 1) <= IDENTITY_TOL]

    def __call__(self, point: str) -> complex:
        return self.f(point)


def ran_pi(f: ComplexFunction, tol: float = IDENTITY_TOL) -> list[complex]:
    """Distinct values of ``f`` whose modulus equals the norm."""
    n = sup_norm(f)
    out: list[complex] = []
    for v in f.values:
        if abs(abs(v) - n) <= tol and all(abs(v - w) > tol for w in out):
            out.append(complex(v))
    return out


@dataclass(frozen=True)
class FaceDescriptor2:
    """Labels the maximal face ``{f in S : f(x) = lam}`` of the unit sphere."""

    x: str
    lam: complex

    def __post_init__(self):
        if not _is_unimodular(self.lam):
            raise ValueError("face phase must be unimodular")


def choquet_boundary(space: PointSpace) -> dict[str, PeakingFunction]:
    """Every point, each with a peaking witness (its indicator)."""
    return {x: PeakingFunction(ComplexFunction.indicator(space, x)) for x in space}


def urysohn_peak(
    space: PointSpace, x: str, O: Iterable[str], eps: float, inner: float = 0.0
) -> PeakingFunction:
    """A peaking function with ``u(x) = 1`` and ``|u| < eps`` off ``O``.

    ``inner`` is the constant taken on ``O \\ {x}`` (any value in ``[0, 1)``
    keeps the function peaking at ``x`` alone).
    """
    O = set(O)
    if x not in O:
        raise PreconditionError("x must belong to O")
    if not O <= set(space.points):
        raise PreconditionError("O must be a subset of the space")
    if not 0 < eps <= 1:
        raise PreconditionError("eps must lie in (0, 1]")
    if not 0 <= inner < 1:
        raise PreconditionError("inner must lie in [0, 1)")
    vals = np.array([inner if p in O else 0.0 for p in space], dtype=np.complex128)
    vals[space.index(x)] = 1.0
    return PeakingFunction(ComplexFunction(space, vals))


def lemma22_h(f: ComplexFunction, g: ComplexFunction, x0: str) -> ComplexFunction:
    """Separating element h with ``||f - h|| = 2 > ||g - h||``."""
    fx, gx = f(x0), g(x0)
    if not _is_unimodular(fx):
        raise PreconditionError("x0 must lie in M_f (|f(x0)| = 1)")
    if abs(fx - gx) <= IDENTITY_TOL:
        raise PreconditionError("f(x0) and g(x0) must differ")
    delta = abs(fx - gx) / 2
    O = [p for p, v in zip(g.domain, g.values) if abs(v - gx) < delta]
    u = urysohn_peak(f.domain, x0, O, 0.5)
    return u.f.with_values(-fx * u.f.values)


def _common_peak_point(fs: Sequence[ComplexFunction], lam: complex) -> list[str]:
    space = fs[0].domain
    common = set(space.points)
    for f in fs:
        if f.domain != space:
            raise PreconditionError("all functions must share a domain")
        if peaking_defect(np.conj(lam) * f.values):
            raise PreconditionError("conj(lambda) * f_j must be a peaking function")
        common &= {p for p, v in zip(space, f.values) if abs(v - lam) <= IDENTITY_TOL}
    return space.ordered(common)


def average_peaking(fs: Sequence[ComplexFunction], lam: complex) -> ComplexFunction:
    """Mean of functions in ``lam P_x``; its unit level set is the intersection of theirs."""
    if not fs:
        raise PreconditionError("need at least one function")
    if not _is_unimodular(lam):
        raise PreconditionError("lambda must be unimodular")
    if not _common_peak_point(fs, lam):
        raise PreconditionError("the functions do not share a peak point with value lambda")
    g = np.mean([f.values for f in fs], axis=0)
    return fs[0].with_values(g)


def phase_peak_transform(f: ComplexFunction, lam: complex, tol: float = DEFAULT_TOL) -> PeakingFunction:
    """``(conj(lam)^2 f^2 + conj(lam) f) / 2``, peaking exactly on ``f^{-1}(lam)``."""
    if not _is_unimodular(lam):
        raise PreconditionError("lambda must be unimodular")
    if not sphere_check(f, tol):
        raise PreconditionError("f must lie on the unit sphere")
    if not np.any(np.abs(f.values - lam) <= tol):
        raise PreconditionError("f never takes the value lambda")
    c = np.conj(lam)
    v = (c * c * f.values**2 + c * f.values) / 2
    return PeakingFunction(f.with_values(v))


def disjoint_face_witnesses(
    space: PointSpace, y: str, y2: str, mu: complex, mu2: complex
) -> tuple[ComplexFunction, ComplexFunction]:
    """``u in mu Q_y`` and ``v in mu2 Q_y2`` at distance 1 (< sqrt 2)."""
    if y == y2:
        raise PreconditionError("points must be distinct")
    u = ComplexFunction.indicator(space, y, mu)
    v = ComplexFunction.indicator(space, y2, mu2)
    return u, v


def _phase(z: complex) -> complex:
    return z / abs(z) if z != 0 else 1.0 + 0j


def _bands(f: ComplexFunction, x0: str) -> list[list[str]]:
    """``F_0, F_1, ..., F_N`` with ``N`` the last non-empty band."""
    f0 = f(x0)
    c = 1.0 - abs(f0)
    d = np.abs(f.values - f0)
    bands = [[p for p, dist in zip(f.domain, d) if dist >= c / 2]]
    positive = d[d > 0]
    if positive.size:
        dmin = float(positive.min())
        m = 1
        while c / 2**m >= dmin:
            lo, hi = c / 2 ** (m + 1), c / 2**m
            bands.append([p for p, dist in zip(f.domain, d) if lo <= dist <= hi])
            m += 1
    return bands


def face_correction(
    f: ComplexFunction, x0: str, r: float, inner: float = 0.5
) -> tuple[ComplexFunction, ComplexFunction]:
    """Build ``g_r in V_x0`` and ``h_r = r f + (1 - r|f(x0)|) lam g_r in lam V_x0``.

    Bands ``F_0, F_1, ...`` partition the points by their distance to ``f(x0)``;
    each ``f_n`` is a peaking function at ``x0`` that is small on ``F_n``.  The
    dyadic series ``f_0 * sum f_n / 2^n`` stops at the last non-empty band ``N``;
    all later bands are empty, so one shared peaking function carries the tail
    ``2^-N`` exactly.
    """
    fx0 = f(x0)
    if abs(fx0) >= 1:
        raise PreconditionError("|f(x0)| must be < 1")
    if not 0 < r < 1:
        raise PreconditionError("r must lie in (0, 1)")
    space = f.domain
    lam = _phase(fx0)
    eps = (1 - r) / (1 - r * abs(fx0))
    everything = set(space.points)
    bands = _bands(f, x0)

    def peak_off(band):
        return urysohn_peak(space, x0, everything - set(band), eps, inner).f.values

    f0 = peak_off(bands[0])
    series = np.zeros(len(space), dtype=np.complex128)
    N = len(bands) - 1
    for n in range(1, N + 1):
        series += peak_off(bands[n]) / 2**n
    series += peak_off([]) / 2**N
    g = f0 * series
    h = r * f.values + (1 - r * abs(fx0)) * lam * g
    return f.with_values(g), f.with_values(h)


def face_correction_shortcut(f: ComplexFunction, x0: str, r: float) -> tuple[ComplexFunction, ComplexFunction]:
    """The same construction with every ``f_n`` equal to the indicator of ``x0``."""
    return face_correction(f, x0, r, inner=0.0)


def face_membership_2(f: ComplexFunction, d: FaceDescriptor2, tol: float = DEFAULT_TOL) -> bool:
    return sphere_check(f, tol) and abs(f(d.x) - d.lam) <= tol


def faces_containing(f: ComplexFunction, tol: float = DEFAULT_TOL) -> list[FaceDescriptor2]:
    """Every maximal face ``lam V_x`` that contains the sphere element ``f``."""
    return [FaceDescriptor2(x, complex(f(x) / abs(f(x)))) for x in unit_level_set(f, tol)]

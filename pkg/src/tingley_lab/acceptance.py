"""The acceptance matrix: eight criteria, each returning a pass/fail result with its worst residual.

Criteria 1, 2, 6, 7 and 8 share one batch of round-trip reconstructions,
computed once per ``AcceptanceRun``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import algebra2 as a2
from . import tbundle as tb
from .core_model import ComplexFunction, PointSpace, random_ball, random_sphere, row_norms, unit_roots
from .isometry_factory import Instance, perturb_oracle, random_instance
from .reconstruction import (
    OracleInconsistent,
    ReconstructionReport,
    circle_isometries_bruteforce,
    is_rotation_or_reflection,
    reconstruct,
)

EXTENSION_TOL = 1e-9
EXACT_TOL = 1e-12


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    worst: float
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.index}. {self.name}: {self.detail} (worst {self.worst:.3g}, {self.seconds:.2f}s)"


@dataclass
class RoundTrip:
    instance: Instance
    report: ReconstructionReport | None
    error: OracleInconsistent | None
    agreement: float  # max |T_recovered - T_factory| on random points


@dataclass
class AcceptanceRun:
    """Shared state for one pass over the matrix."""

    seed: int = 0
    trials: int = 200
    samples: int = 1000
    pairs: int = 10_000
    lemma_inputs: int = 1000
    perturbed: int = 50
    timings: dict = field(default_factory=dict)

    def _round_trips(self, section: int) -> list[RoundTrip]:
        rng = np.random.default_rng([self.seed, section])
        out = []
        start = time.perf_counter()
        for i in range(self.trials):
            if section == 2:
                inst = random_instance(2, size=int(rng.integers(2, 11)), seed=self.seed * 100_003 + i)
            else:
                inst = random_instance(
                    3, size=int(rng.integers(1, 7)), n=int(rng.choice([4, 8])), seed=self.seed * 100_003 + i
                )
            try:
                rep = reconstruct(inst.oracle, samples=self.samples, seed=i, pairs=self.pairs)
                err = None
            except OracleInconsistent as exc:
                rep, err = None, exc
            agreement = math.inf
            if rep is not None:
                pts = random_ball(np.random.default_rng(i), 100, len(inst.oracle.domain_coords)) * 3
                agreement = float(np.max(row_norms(rep.T()(pts) - inst.T(pts))))
            out.append(RoundTrip(inst, rep, err, agreement))
        self.timings[section] = time.perf_counter() - start
        return out

    @cached_property
    def section2(self) -> list[RoundTrip]:
        return self._round_trips(2)

    @cached_property
    def section3(self) -> list[RoundTrip]:
        return self._round_trips(3)


def _timed(fn):
    def wrapper(run: AcceptanceRun) -> CriterionResult:
        start = time.perf_counter()
        res = fn(run)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _failures(trips: list[RoundTrip]) -> list[str]:
    return [f"seed {t.instance.seed}: {t.error}" for t in trips if t.error is not None]


@_timed
def criterion_1(run: AcceptanceRun) -> CriterionResult:
    """Setting 2 round trip: (K, phi) exact, kappa within 1e-9, extension residual within 1e-9, under 10 s."""
    trips = run.section2
    bad = _failures(trips)
    worst = 0.0
    for t in trips:
        if t.report is None:
            continue
        spec, rec = t.instance.spec, t.report.spec
        if rec.K != spec.K or rec.phi != spec.phi:
            bad.append(f"seed {t.instance.seed}: set data differ")
        worst = max(worst, float(np.max(np.abs(rec.kappa - spec.kappa))), t.report.residuals["extension"])
    elapsed = run.timings[2]
    passed = not bad and worst <= EXTENSION_TOL and elapsed < 10
    return CriterionResult(1, "setting-2 round trip", passed, worst,
                           f"{len(trips)} instances, {len(bad)} mismatches, {elapsed:.2f}s of 10s")


@_timed
def criterion_2(run: AcceptanceRun) -> CriterionResult:
    """Setting 3 round trip: normal form equals the factory spec, T agrees within 1e-9, under 20 s."""
    trips = run.section3
    bad = _failures(trips)
    worst = 0.0
    for t in trips:
        if t.report is None:
            continue
        if not t.report.spec.same_as(t.instance.spec):
            bad.append(f"seed {t.instance.seed}: normal form differs")
        worst = max(worst, t.agreement, t.report.residuals["extension"])
    elapsed = run.timings[3]
    passed = not bad and worst <= EXTENSION_TOL and elapsed < 20
    return CriterionResult(2, "setting-3 round trip", passed, worst,
                           f"{len(trips)} instances, {len(bad)} mismatches, {elapsed:.2f}s of 20s")


def _random_space(rng, lo=2, hi=8) -> PointSpace:
    return PointSpace(tuple(f"p{i}" for i in range(int(rng.integers(lo, hi + 1)))))


def _sphere_function(rng, space: PointSpace) -> ComplexFunction:
    return ComplexFunction(space, random_sphere(rng, 1, len(space))[0])


def _check_separation(rng, count) -> tuple[int, float]:
    fails, worst = 0, 0.0
    for _ in range(count):
        space = _random_space(rng)
        f = _sphere_function(rng, space)
        x0 = a2.unit_level_set(f, EXACT_TOL)[0]
        g = _sphere_function(rng, space)
        if abs(g(x0) - f(x0)) <= EXACT_TOL:
            g = g.with_values(-g.values)
        h = a2.lemma22_h(f, g, x0)
        gap = abs(float(np.max(np.abs(f.values - h.values))) - 2)
        worst = max(worst, gap)
        if gap > EXACT_TOL or not np.max(np.abs(g.values - h.values)) < 2:
            fails += 1
    return fails, worst


def _check_averaging(rng, count) -> tuple[int, float]:
    fails = 0
    for _ in range(count):
        space = _random_space(rng)
        m = len(space)
        lam = complex(np.exp(2j * np.pi * rng.random()))
        x = int(rng.integers(m))
        fs = []
        for _ in range(int(rng.integers(1, 5))):
            vals = random_ball(rng, 1, m)[0] * 0.99
            vals[x] = 1
            extra = rng.random(m) < 0.3
            vals[extra] = 1
            fs.append(ComplexFunction(space, lam * vals))
        g = a2.average_peaking(fs, lam)
        expected = set.intersection(*(set(a2.unit_level_set(f, EXACT_TOL)) for f in fs))
        if set(a2.unit_level_set(g, EXACT_TOL)) != expected:
            fails += 1
    return fails, 0.0


def _check_phase_peak(rng, count) -> tuple[int, float]:
    fails = 0
    for _ in range(count):
        space = _random_space(rng)
        f = _sphere_function(rng, space)
        x0 = a2.unit_level_set(f, EXACT_TOL)[0]
        lam = f(x0) / abs(f(x0))
        f = f.with_values(np.where(np.abs(f.values - f(x0)) == 0, lam, f.values))
        p = a2.phase_peak_transform(f, lam)
        level = {q for q, v in zip(space, f.values) if abs(v - lam) <= EXACT_TOL}
        if set(p.peak_set) != level or set(a2.unit_level_set(p.f, EXACT_TOL)) != level:
            fails += 1
    return fails, 0.0


def _check_disjoint(rng, count) -> tuple[int, float]:
    fails, worst = 0, 0.0
    for _ in range(count):
        space = _random_space(rng)
        i, j = rng.choice(len(space), 2, replace=False)
        mu, mu2 = np.exp(2j * np.pi * rng.random(2))
        u, v = a2.disjoint_face_witnesses(space, space.points[i], space.points[j], mu, mu2)
        d = float(np.max(np.abs(u.values - v.values)))
        # the distance is exactly max(|mu|, |mu2|) = 1; the phases carry rounding in their modulus
        gap = abs(d - 1)
        worst = max(worst, gap)
        members = not a2.peaking_defect(np.conj(mu) * u.values) and not a2.peaking_defect(np.conj(mu2) * v.values)
        if gap > EXACT_TOL or not d < math.sqrt(2) or not members:
            fails += 1
    return fails, worst


def _check_face_correction(rng, count) -> tuple[int, float]:
    fails, worst = 0, 0.0
    for _ in range(count):
        space = _random_space(rng)
        f = _sphere_function(rng, space)
        inside = [p for p, v in zip(space, f.values) if abs(v) < 1 - 1e-6]
        if not inside:
            vals = f.values.copy()
            vals[-1] *= 0.5
            f = f.with_values(vals)
            inside = [space.points[-1]] if abs(vals[-1]) < 1 else []
            if not inside:
                continue
        x0 = inside[int(rng.integers(len(inside)))]
        r = float(rng.uniform(0.01, 0.99))
        _, h = a2.face_correction(f, x0, r)
        lam = f(x0) / abs(f(x0)) if f(x0) != 0 else 1.0
        membership = max(abs(h.norm() - 1), abs(h(x0) - lam))
        worst = max(worst, membership)
        bound = 2 - r - r * abs(f(x0))
        if membership > EXACT_TOL or not float(np.max(np.abs(h.values - f.values))) < bound:
            fails += 1
    return fails, worst


def _check_equivariant_face(rng, count) -> tuple[int, float]:
    fails, worst = 0, 0.0
    for _ in range(count):
        # a single orbit cannot be on the sphere while |a(t0)| < 1, so use at least two
        bundle = tb.FiniteTBundle(int(rng.choice([4, 8])), tuple(f"o{i}" for i in range(int(rng.integers(2, 7)))))
        vals = random_sphere(rng, 1, len(bundle.base))[0]
        j = int(rng.integers(len(bundle.base)))
        vals[j] *= rng.uniform(0, 0.9)
        if np.max(np.abs(vals)) < 1:
            vals[(j + 1) % len(vals)] = 1.0
        a = tb.EquivariantFunction(bundle, vals)
        t0 = tb.BundlePoint(bundle.base[j], int(rng.integers(bundle.n)))
        c = abs(a(t0))
        eps = float(rng.uniform(0.01, 0.99 - c))
        a_eps, b_eps = tb.face_approximation_pair(a, t0, eps)
        lam = a(t0) / c if c > 0 else 1.0
        for r in (0.1, 0.5, 0.9, 0.99):
            comb = r * a_eps.base_values + (1 - r * c) * lam * b_eps.base_values
            cf = a.with_base(comb)
            dev = max(cf.norm() - 1, 0.0, abs(cf(t0) - lam))
            worst = max(worst, dev)
            if dev > EXACT_TOL:
                fails += 1
    return fails, worst


@_timed
def criterion_3(run: AcceptanceRun) -> CriterionResult:
    """Construction lemmas hold on seeded random inputs."""
    rng = np.random.default_rng([run.seed, 3])
    checks = {
        "separation": _check_separation,
        "averaging": _check_averaging,
        "phase-peak": _check_phase_peak,
        "disjoint": _check_disjoint,
        "face-correction": _check_face_correction,
        "equivariant-face": _check_equivariant_face,
    }
    fails, worst, parts = 0, 0.0, []
    for name, check in checks.items():
        f, w = check(rng, run.lemma_inputs)
        fails += f
        parts.append(f"{name} {f}")
        worst = max(worst, w)
    return CriterionResult(3, "construction lemmas", fails == 0, worst,
                           f"{run.lemma_inputs} inputs each, failures: " + ", ".join(parts))


@_timed
def criterion_4(run: AcceptanceRun) -> CriterionResult:
    """Haar projection: idempotent, contractive, fixes exactly the equivariant functions."""
    rng = np.random.default_rng([run.seed, 4])
    worst, fails = 0.0, 0
    for _ in range(run.lemma_inputs):
        bundle = tb.FiniteTBundle(int(rng.choice([4, 8])), tuple(f"o{i}" for i in range(int(rng.integers(1, 6)))))
        shape = (len(bundle.base), bundle.n)
        raw = random_ball(rng, 1, shape[0] * shape[1]).reshape(shape)
        p = tb.haar_project_values(bundle, raw)
        total = p[:, None] * unit_roots(bundle.n)[None, :]
        idem = float(np.max(np.abs(tb.haar_project_values(bundle, total) - p)))
        contraction = float(np.max(np.abs(p)) - np.max(np.abs(raw)))
        eq = tb.is_equivariant(bundle, raw, EXACT_TOL)
        fixed = float(np.max(np.abs(total - raw))) <= EXACT_TOL
        worst = max(worst, idem, contraction)
        if idem > EXACT_TOL or contraction > EXACT_TOL or eq != fixed or not tb.is_equivariant(bundle, total):
            fails += 1
    return CriterionResult(4, "Haar projection", fails == 0, worst, f"{run.lemma_inputs} functions, {fails} failures")


def _random_idempotent(rng, m: int) -> np.ndarray:
    while True:
        S = random_ball(rng, m, m) + np.eye(m)
        if np.linalg.cond(S) < 50:
            break
    rank = int(rng.integers(1, m))
    E = np.diag([1.0] * rank + [0.0] * (m - rank)).astype(np.complex128)
    return S @ E @ np.linalg.inv(S)


@_timed
def criterion_5(run: AcceptanceRun) -> CriterionResult:
    """M-projections are exactly the orbit-union restrictions."""
    rng = np.random.default_rng([run.seed, 5])
    wrong = []
    for m in range(1, 5):
        bundle = tb.FiniteTBundle(4, tuple(f"o{i}" for i in range(m)))
        for summand in tb.enumerate_m_summands(bundle):
            ok, D = tb.m_projection_check(bundle, summand.projection, samples=200, seed=int(rng.integers(1 << 30)))
            if not ok or D != summand.orbits:
                wrong.append(f"indicator {sorted(summand.orbits)} on {m} orbits")
    for k in range(20):
        m = 2 + k % 3
        bundle = tb.FiniteTBundle(4, tuple(f"o{i}" for i in range(m)))
        P = _random_idempotent(rng, m)
        ok, _ = tb.m_projection_check(bundle, P, samples=200, seed=k)
        if ok:
            wrong.append(f"random idempotent {k} accepted")
    total = sum(2**m for m in range(1, 5))
    return CriterionResult(5, "M-summand classification", not wrong, float(len(wrong)),
                           f"{total} indicators and 20 idempotents, {len(wrong)} wrong")


@_timed
def criterion_6(run: AcceptanceRun) -> CriterionResult:
    """Phase maps are grid contractions, orientation from i agrees with all other probes, C4 base case."""
    contraction_violations, orientation_disagreements, worst = 0, 0, 0.0
    reports = [t.report for t in run.section2 + run.section3 if t.report is not None]
    missing = len(run.section2) + len(run.section3) - len(reports)
    grid = unit_roots(16)
    dist = np.abs(grid[:, None] - grid[None, :])
    for rep in reports:
        probes = rep.table.probes
        for row, sign in zip(probes, rep.table.orientation):
            gaps = np.abs(row[:, None] - row[None, :]) - dist
            worst = max(worst, float(np.max(gaps)))
            contraction_violations += int(np.sum(gaps > EXACT_TOL))
            expected = row[0] * (grid if sign == "+" else np.conj(grid))
            orientation_disagreements += int(np.sum(np.abs(row - expected) > EXTENSION_TOL))
    isos = circle_isometries_bruteforce(4)
    kinds = [is_rotation_or_reflection(p) for p in isos]
    base_ok = len(isos) == 8 and None not in kinds
    passed = missing == 0 and contraction_violations == 0 and orientation_disagreements == 0 and base_ok
    return CriterionResult(
        6, "phase-map structure", passed, max(worst, 0.0),
        f"{len(reports)} tables, {contraction_violations} contraction violations, "
        f"{orientation_disagreements} orientation disagreements, {len(isos)}/24 C4 permutations isometric",
    )


def perturbed_outcome(inst: Instance, site: int, magnitude: float = 1e-3, seed: int = 0) -> tuple[str, float]:
    """Run the engine on a corrupted copy of ``inst``; return the channel and worst residual."""
    size = len(inst.oracle.domain_coords)
    point = np.zeros(size, dtype=np.complex128)
    point[site] = 1.0
    bad = perturb_oracle(inst.oracle, point, magnitude)
    try:
        rep = reconstruct(bad, samples=200, seed=seed)
    except OracleInconsistent as exc:
        return "inconsistent", exc.residual
    return ("ok" if rep.ok else "residual"), rep.worst_residual


@_timed
def criterion_7(run: AcceptanceRun) -> CriterionResult:
    """Corrupted oracles are flagged with residual at least 5e-4; clean ones never are."""
    rng = np.random.default_rng([run.seed, 7])
    missed, worst = [], math.inf
    for k in range(run.perturbed):
        section = 2 if k % 2 == 0 else 3
        size = int(rng.integers(1, 7))
        inst = random_instance(section, size=size, n=int(rng.choice([4, 8])), seed=10_000 + k)
        channel, residual = perturbed_outcome(inst, int(rng.integers(size)), seed=k)
        worst = min(worst, residual)
        if channel == "ok" or residual < 5e-4:
            missed.append(k)
    clean = run.section2 + run.section3
    false_flags = sum(1 for t in clean if t.report is None or not t.report.ok)
    passed = not missed and false_flags == 0
    return CriterionResult(7, "negative detection", passed, worst,
                           f"{run.perturbed - len(missed)}/{run.perturbed} corruptions flagged (smallest residual shown), "
                           f"{false_flags} false flags on {len(clean)} clean instances")


@_timed
def criterion_8(run: AcceptanceRun) -> CriterionResult:
    """The recovered T is isometric on random pairs and matches the oracle on sphere samples."""
    reports = [t.report for t in run.section2 + run.section3 if t.report is not None]
    missing = len(run.section2) + len(run.section3) - len(reports)
    iso = max((r.residuals["isometry"] for r in reports), default=math.inf)
    ext = max((r.residuals["extension"] for r in reports), default=math.inf)
    worst = max(iso, ext)
    passed = missing == 0 and worst <= EXTENSION_TOL
    return CriterionResult(8, "extension isometry", passed, worst,
                           f"{len(reports)} instances, {run.pairs} pairs and {run.samples} samples each")


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8)


def run_suite(seed: int = 0, trials: int = 200, **kwargs) -> tuple[list[CriterionResult], float]:
    start = time.perf_counter()
    run = AcceptanceRun(seed=seed, trials=trials, **kwargs)
    results = [c(run) for c in CRITERIA]
    return results, time.perf_counter() - start

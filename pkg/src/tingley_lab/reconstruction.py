"""Recover the real-linear extension of a sphere isometry from oracle access.

The engine only queries the oracle.  Maximal faces of the domain sphere are
probed with a family of functions that peak at one point with a fixed phase.
The image face is read off from the coordinate on which every output is
unimodular with one common value.  Sweeping the phase over a grid of roots of
unity gives a map on the circle, and its value at ``i`` decides whether the
point is carried linearly or conjugate-linearly.  Those two pieces of data
determine the whole extension, which is then checked against the oracle on
random sphere elements.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .core_model import (
    DEFAULT_TOL,
    PointEvaluation,
    random_ball,
    random_sphere,
    row_norms,
    unit_roots,
)
from .isometry_factory import (
    SphereIsometryOracle,
    WcoSpec2,
    WcoSpec3,
    wco2_maps,
    wco3_maps,
)
from .tbundle import BundlePoint


class OracleInconsistent(Exception):
    """The oracle cannot be a sphere isometry of the expected form."""

    def __init__(self, message: str, residual: float = float("inf"), witness=None):
        super().__init__(message)
        self.residual = float(residual)
        self.witness = witness


def _check_grid(m: int) -> np.ndarray:
    if m < 4 or m % 4:
        raise ValueError("the probe order must be a positive multiple of 4")
    return unit_roots(m)


def _classify(grid: np.ndarray, values: np.ndarray, tol: float, what: str) -> str:
    """Decide ``v(lam) = v(1) lam`` versus ``v(1) conj(lam)`` from the probe at ``lam = i``.

    Every other grid value must then agree with the chosen branch.
    """
    m = len(grid)
    v1, vi = values[0], values[m // 4]
    plus, minus = abs(vi - v1 * 1j), abs(vi + v1 * 1j)
    if plus <= tol:
        sign, expected = "+", v1 * grid
    elif minus <= tol:
        sign, expected = "-", v1 * np.conj(grid)
    else:
        raise OracleInconsistent(f"{what}: the probe at i matches neither orientation", min(plus, minus))
    dev = np.abs(values - expected)
    if np.max(dev) > tol:
        k = int(np.argmax(dev))
        raise OracleInconsistent(f"{what}: grid probe {k} disagrees with the orientation", float(dev[k]))
    return sign


def _check_contraction(grid: np.ndarray, values: np.ndarray, tol: float, what: str) -> None:
    gaps = np.abs(values[:, None] - values[None, :]) - np.abs(grid[:, None] - grid[None, :])
    if np.max(gaps) > tol:
        raise OracleInconsistent(f"{what}: not a contraction on the probe grid", float(np.max(gaps)))


# -- setting 2 ---------------------------------------------------------------------

def _peak_family(size: int, j: int, lam: complex) -> np.ndarray:
    """``lam e_j`` followed by ``lam (e_j + e_k / 2)`` for every ``k != j``."""
    probes = np.zeros((size, size), dtype=np.complex128)
    probes[:, j] = lam
    others = [k for k in range(size) if k != j]
    probes[np.arange(1, size), others] = lam / 2
    return probes


def _common_unimodular(outputs: np.ndarray, tol: float) -> list[tuple[int, complex]]:
    """Coordinates on which every row is unimodular with one shared value."""
    first = outputs[0]
    unimodular = np.all(np.abs(np.abs(outputs) - 1) <= tol, axis=0)
    shared = np.all(np.abs(outputs - first) <= tol, axis=0)
    return [(int(j), complex(first[j])) for j in np.nonzero(unimodular & shared)[0]]


def _probe_face(oracle: SphereIsometryOracle, j: int, lam: complex, tol: float) -> tuple[int, complex]:
    outputs = oracle.forward(_peak_family(len(oracle.domain_coords), j, lam))
    candidates = _common_unimodular(outputs, tol)
    if not candidates:
        raise OracleInconsistent(
            f"no common unimodular coordinate for the face at {oracle.domain_coords[j]}",
            witness=_peak_family(len(oracle.domain_coords), j, lam)[0],
        )
    if len(candidates) == 1:
        return candidates[0]
    accepted = []
    for y, nu in candidates:
        back = oracle.inverse(_peak_family(len(oracle.codomain_coords), y, nu))
        if np.all(np.abs(back[:, j] - lam) <= tol):
            accepted.append((y, nu))
    if len(accepted) != 1:
        raise OracleInconsistent(
            f"reverse probing left {len(accepted)} candidate faces for {oracle.domain_coords[j]}"
        )
    return accepted[0]


def probe_face_image_2(
    oracle: SphereIsometryOracle, x: str, lam: complex = 1.0, tol: float = DEFAULT_TOL
) -> tuple[str, complex]:
    """The face ``mu W_y`` that the oracle maps ``lam V_x`` into."""
    j = oracle.domain_coords.index(x)
    y, mu = _probe_face(oracle, j, complex(lam), tol)
    return oracle.codomain_coords[y], mu


@dataclass(frozen=True, eq=False)
class AlphaTable:
    """Per domain point: the image point, ``alpha_x(1)``, the orientation and the probed ``alpha_x``."""

    points: tuple[str, ...]
    alpha1: np.ndarray
    orientation: tuple[str, ...]
    probes: np.ndarray  # shape (points, grid)

    @property
    def K_plus(self) -> list[str]:
        return [x for x, o in zip(self.points, self.orientation) if o == "+"]

    @property
    def K_minus(self) -> list[str]:
        return [x for x, o in zip(self.points, self.orientation) if o == "-"]

    def beta1(self) -> np.ndarray:
        """``alpha_x(1)^-1``, the phase of the inverse face map at ``phi(x)``."""
        return np.conj(self.alpha1)


def compute_alpha_phi_2(
    oracle: SphereIsometryOracle, m: int = 16, tol: float = DEFAULT_TOL
) -> tuple[dict[str, str], AlphaTable]:
    grid = _check_grid(m)
    X = oracle.domain_coords
    Y = oracle.codomain_coords
    phi: dict[str, str] = {}
    rows, signs = [], []
    for j, x in enumerate(X):
        images = [_probe_face(oracle, j, lam, tol) for lam in grid]
        targets = {y for y, _ in images}
        if len(targets) != 1:
            raise OracleInconsistent(f"the image point of {x} depends on the face phase")
        values = np.array([mu for _, mu in images])
        _check_contraction(grid, values, tol, f"alpha at {x}")
        signs.append(_classify(grid, values, tol, f"alpha at {x}"))
        phi[x] = Y[targets.pop()]
        rows.append(values)
    if len(set(phi.values())) != len(phi):
        raise OracleInconsistent("the face map on points is not injective")
    probes = np.array(rows)
    return phi, AlphaTable(tuple(X), probes[:, 0].copy(), tuple(signs), probes)


@dataclass(frozen=True, eq=False)
class SigmaTable:
    """Per transversal orbit: its image orbit, ``sigma(t0, 1)``, the orientation and the probed row."""

    orbits: tuple[str, ...]
    targets: tuple[str, ...]
    sigma1: np.ndarray
    orientation: tuple[str, ...]
    probes: np.ndarray

    @property
    def X0_plus(self) -> list[str]:
        return [t for t, o in zip(self.orbits, self.orientation) if o == "+"]

    @property
    def X0_minus(self) -> list[str]:
        return [t for t, o in zip(self.orbits, self.orientation) if o == "-"]


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    section: int
    phi: dict  # domain point or orbit -> codomain point or orbit
    table: object  # AlphaTable or SigmaTable
    spec: object  # recovered WcoSpec2 / WcoSpec3, in the factory's direction
    residuals: dict
    samples: int
    seed: int
    tol: float
    lemma_checks: dict = field(default_factory=dict)
    witness: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def worst_residual(self) -> float:
        return max(self.residuals.values())

    def T(self):
        """The recovered real-linear isometry on coordinate vectors."""
        maps = wco2_maps if self.section == 2 else wco3_maps
        return maps(self.spec)[0]

    def evaluations(self) -> dict[str, dict]:
        """For each codomain point, the (possibly conjugated) evaluation that ``T`` composes with."""
        if self.section == 2:
            return {
                y: {"weight": [self.spec.kappa[j].real, self.spec.kappa[j].imag],
                    **PointEvaluation(self.spec.phi[y], y not in self.spec.K).to_json()}
                for j, y in enumerate(self.spec.Y.points)
            }
        return {
            s: PointEvaluation(BundlePoint(*self.spec.phi[s]).label(), s not in self.spec.D_tilde).to_json()
            for s in self.spec.Y.base
        }

    def to_json(self) -> dict:
        t = self.table
        out = {"section": self.section, "phi": dict(self.phi)}
        if self.section == 2:
            out["alpha1"] = [[z.real, z.imag] for z in t.alpha1]
            out["orientation"] = list(t.orientation)
            out["D"] = []
            out["K"] = [y for y in self.spec.Y.points if y in self.spec.K]
            out["kappa"] = [[z.real, z.imag] for z in self.spec.kappa]
            out["psi"] = {y: x for y, x in self.spec.phi.items()}
        else:
            out["sigma1"] = [[z.real, z.imag] for z in t.sigma1]
            out["orientation"] = list(t.orientation)
            out["D"] = [o for o in self.spec.X.base if o in self.spec.D]
            out["normal_form"] = self.spec.to_json()
        out["evaluations"] = self.evaluations()
        out["residuals"] = {k: float(v) for k, v in self.residuals.items()}
        out["lemma_checks"] = {k: float(v) for k, v in self.lemma_checks.items()}
        out["samples"] = self.samples
        out["seed"] = self.seed
        out["ok"] = self.ok
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _extension_residual(oracle, T, inputs: np.ndarray) -> tuple[float, np.ndarray | None]:
    dev = row_norms(oracle.forward(inputs) - T(inputs))
    k = int(np.argmax(dev))
    return float(dev[k]), inputs[k]


def _isometry_residual(T, size: int, rng: np.random.Generator, pairs: int) -> float:
    g1, g2 = random_ball(rng, pairs, size), random_ball(rng, pairs, size)
    scale = rng.random((pairs, 1)) * 4
    g1, g2 = g1 * scale, g2 * scale
    return float(np.max(np.abs(row_norms(T(g1) - T(g2)) - row_norms(g1 - g2)), initial=0.0))


def _face_anchors(size: int, grid: np.ndarray) -> np.ndarray:
    """``lam e_j`` for every coordinate and grid phase: the engine's own probe centres."""
    eye = np.eye(size, dtype=np.complex128)
    return (grid[:, None, None] * eye[None]).reshape(-1, size)


def reconstruct_2(
    oracle: SphereIsometryOracle,
    samples: int = 1000,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    probes: int = 16,
    pairs: int | None = None,
) -> ReconstructionReport:
    grid = _check_grid(probes)
    phi, table = compute_alpha_phi_2(oracle, probes, tol)
    X, Y = oracle.domain, oracle.codomain
    psi = {y: x for x, y in phi.items()}
    sign = dict(zip(table.points, table.orientation))
    alpha1 = dict(zip(table.points, table.alpha1))
    spec = WcoSpec2(
        X, Y,
        [alpha1[psi[y]] for y in Y.points],
        frozenset(y for y in Y.points if sign[psi[y]] == "+"),
        psi,
    )
    T = wco2_maps(spec)[0]
    rng = np.random.default_rng(seed)
    inputs = np.vstack([_face_anchors(len(X), grid), random_sphere(rng, samples, len(X))])
    ext, witness = _extension_residual(oracle, T, inputs)
    iso = _isometry_residual(T, len(X), rng, pairs if pairs is not None else samples)
    return ReconstructionReport(
        2, phi, table, spec, {"extension": ext, "isometry": iso}, samples, seed, tol, witness=witness
    )


# -- setting 3 ------------------------------------------------------------------------

def probe_face_image_3(oracle: SphereIsometryOracle, t0: str, tol: float = DEFAULT_TOL) -> tuple[str, complex]:
    """Image of the face ``F_{t0,1}`` as ``(s0, nu)``: the face ``F_{s0,nu}`` with ``s0`` on the transversal.

    Coordinates are base values, so the common-value coordinate already names
    the transversal representative of the image orbit.
    """
    j = oracle.domain_coords.index(t0)
    s, nu = _probe_face(oracle, j, 1.0, tol)
    return oracle.codomain_coords[s], nu


def _sigma_row(oracle, s: int, grid: np.ndarray, witness: np.ndarray) -> np.ndarray:
    return oracle.forward(grid[:, None] * witness[None, :])[:, s]


def compute_sigma_3(
    oracle: SphereIsometryOracle, t0: str, s0: str, m: int = 16, tol: float = DEFAULT_TOL, witness=None
) -> tuple[complex, str, np.ndarray]:
    """``sigma(t0, mu) = Delta(mu a)(s0)`` over the grid, for a fixed ``a`` in ``F_{t0,1}``.

    Returns ``(sigma(t0, 1), orientation, row)``.
    """
    grid = _check_grid(m)
    j = oracle.domain_coords.index(t0)
    s = oracle.codomain_coords.index(s0)
    size = len(oracle.domain_coords)
    a = np.zeros(size, dtype=np.complex128) if witness is None else np.array(witness, dtype=np.complex128)
    if witness is None:
        a[j] = 1.0
    elif abs(a[j] - 1) > tol or row_norms(a) > 1 + tol:
        raise ValueError("the witness must lie in the face F_{t0,1}")
    row = _sigma_row(oracle, s, grid, a)
    what = f"sigma at {t0}"
    mod = np.abs(np.abs(row) - 1)
    if np.max(mod) > tol:
        raise OracleInconsistent(f"{what}: value off the unit circle", float(np.max(mod)))
    half = m // 2
    anti = np.abs(np.roll(row, -half) + row)
    if np.max(anti) > tol:
        raise OracleInconsistent(f"{what}: sigma(-mu) != -sigma(mu)", float(np.max(anti)))
    _check_contraction(grid, row, tol, what)
    sign = _classify(grid, row, tol, what)
    return complex(row[0]), sign, row


def _root_index(z: complex, n: int, tol: float, what: str) -> int:
    k = int(np.round(np.angle(z) / (2 * np.pi / n))) % n
    gap = abs(z - unit_roots(n)[k])
    if gap > tol:
        raise OracleInconsistent(f"{what}: sigma(t0, 1) is not an n-th root of unity", gap)
    return k


def _zero_propagation(oracle, phi: dict, rng, trials: int) -> float:
    """Largest ``|Delta(a)(phi(t0))|`` over sphere elements vanishing at ``t0``."""
    X, Y = oracle.domain_coords, oracle.codomain_coords
    size = len(X)
    if size < 2:
        return 0.0
    worst = 0.0
    for j, t in enumerate(X):
        a = random_sphere(rng, trials, size)
        a[:, j] = 0
        nz = row_norms(a) > 0
        a = a[nz] / row_norms(a[nz])[:, None]
        if a.size:
            worst = max(worst, float(np.max(np.abs(oracle.forward(a)[:, Y.index(phi[t])]))))
    return worst


def reconstruct_3(
    oracle: SphereIsometryOracle,
    samples: int = 1000,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    probes: int = 16,
    pairs: int | None = None,
    lemma_trials: int = 16,
) -> ReconstructionReport:
    grid = _check_grid(probes)
    Xb, Yb = oracle.domain, oracle.codomain
    if Xb.n % 4 or Yb.n % 4:
        raise ValueError("both bundles need n divisible by 4")
    phi: dict[str, str] = {}
    sig1, signs, rows = [], [], []
    for t0 in Xb.base:
        s0, nu = probe_face_image_3(oracle, t0, tol)
        s1, sign, row = compute_sigma_3(oracle, t0, s0, probes, tol)
        if abs(s1 - nu) > tol:
            raise OracleInconsistent(f"face phase and sigma disagree at {t0}", abs(s1 - nu))
        phi[t0] = s0
        sig1.append(s1)
        signs.append(sign)
        rows.append(row)
    if len(set(phi.values())) != len(phi):
        raise OracleInconsistent("the orbit map is not injective")
    table = SigmaTable(tuple(Xb.base), tuple(phi[t] for t in Xb.base), np.array(sig1), tuple(signs), np.array(rows))
    # absorb sigma(t0, 1) = w^k into the representative: w^k on the linear part, w^-k on the conjugate part
    normal = {}
    for t0, s1, sign in zip(Xb.base, sig1, signs):
        k = _root_index(s1, Xb.n, tol, f"normal form at {t0}")
        normal[phi[t0]] = (t0, k if sign == "+" else (-k) % Xb.n)
    spec = WcoSpec3(Xb, Yb, frozenset(table.X0_plus), normal)
    T = wco3_maps(spec)[0]
    rng = np.random.default_rng(seed)
    size = len(Xb.base)
    inputs = np.vstack([_face_anchors(size, grid), random_sphere(rng, samples, size)])
    ext, witness = _extension_residual(oracle, T, inputs)
    iso = _isometry_residual(T, size, rng, pairs if pairs is not None else samples)
    checks = {"zero_propagation": _zero_propagation(oracle, phi, rng, lemma_trials)}
    half = probes // 2
    checks["antisymmetry"] = float(np.max(np.abs(np.roll(table.probes, -half, axis=1) + table.probes)))
    residuals = {"extension": ext, "isometry": iso, "zero_propagation": checks["zero_propagation"]}
    return ReconstructionReport(3, phi, table, spec, residuals, samples, seed, tol, checks, witness)


def reconstruct(oracle: SphereIsometryOracle, **kwargs) -> ReconstructionReport:
    if oracle.section == 2:
        return reconstruct_2(oracle, **kwargs)
    return reconstruct_3(oracle, **kwargs)


# -- checks -------------------------------------------------------------------------------

def lemma_property_suite(
    oracle: SphereIsometryOracle,
    trials: int = 100,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    report: ReconstructionReport | None = None,
) -> dict[str, dict]:
    """Check lemma conclusions literally against the oracle; worst residual per lemma.

    Inputs are the face probe centres followed by ``trials`` random sphere elements.
    """
    if report is None:
        report = reconstruct(oracle, samples=0, tol=tol, seed=seed)
    rng = np.random.default_rng(seed)
    X, Y = oracle.domain_coords, oracle.codomain_coords
    size = len(X)
    # inverse of the recovered point map, as coordinate indices: column y reads x = pull[y]
    pull = np.array([X.index(x) for x in _pullback(report)])
    f = np.vstack([_face_anchors(size, unit_roots(16)), random_sphere(rng, trials, size)])
    out = oracle.forward(f)
    results: dict[str, float] = {}
    results["modulus"] = float(np.max(np.abs(np.abs(out) - np.abs(f[:, pull])), initial=0.0))
    if oracle.section == 2:
        # f = g on M_f forces Delta(f) = Delta(g) on M_Delta(f)
        g = random_ball(rng, len(f), size)
        on_peak = np.abs(np.abs(f) - 1) <= 1e-12
        g = np.where(on_peak, f, g * 0.999)
        out_g = oracle.forward(g)
        peak_out = np.abs(np.abs(out) - 1) <= tol
        gap = np.where(peak_out, np.abs(out - out_g), 0.0)
        results["peak_agreement"] = float(np.max(gap, initial=0.0))
    else:
        results["zero_propagation"] = _zero_propagation(oracle, report.phi, rng, trials)
        results["antisymmetry"] = report.lemma_checks.get("antisymmetry", 0.0)
    return {k: {"residual": v, "passed": v <= tol} for k, v in results.items()}


def _pullback(report: ReconstructionReport) -> list[str]:
    """Domain coordinate read by each codomain coordinate, in codomain order."""
    spec = report.spec
    if report.section == 2:
        return [spec.phi[y] for y in spec.Y.points]
    return [spec.phi[s][0] for s in spec.Y.base]


def consistency_check(
    oracle: SphereIsometryOracle,
    report: ReconstructionReport,
    n_samples: int = 1000,
    tol: float = DEFAULT_TOL,
    seed: int = 1,
    probes: int = 16,
) -> dict:
    """Recompute the extension residual on fresh samples plus the face probe centres."""
    rng = np.random.default_rng(seed)
    size = len(oracle.domain_coords)
    inputs = np.vstack([_face_anchors(size, unit_roots(probes)), random_sphere(rng, n_samples, size)])
    worst, witness = _extension_residual(oracle, report.T(), inputs)
    return {"residual": worst, "witness": witness, "passed": worst <= tol, "samples": len(inputs)}


def circle_isometries_bruteforce(n: int = 4, tol: float = 1e-12) -> list[tuple[complex, ...]]:
    """All permutations of the n-th roots of unity that preserve distances."""
    roots = unit_roots(n)
    dist = np.abs(roots[:, None] - roots[None, :])
    found = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        if np.max(np.abs(dist[p][:, p] - dist)) <= tol:
            found.append(tuple(complex(roots[k]) for k in perm))
    return found


def is_rotation_or_reflection(images: tuple[complex, ...], n: int = 4, tol: float = 1e-12) -> str | None:
    roots = unit_roots(n)
    imgs = np.array(images)
    if np.max(np.abs(imgs - imgs[0] * roots)) <= tol:
        return "+"
    if np.max(np.abs(imgs - imgs[0] * np.conj(roots))) <= tol:
        return "-"
    return None

"""Command-line front end: ``gen``, ``reconstruct`` and ``suite``.

Exit codes: 0 success, 2 bad input, 3 the oracle is structurally
inconsistent, 4 a residual exceeded the tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core_model import DEFAULT_TOL, ParseError, load_json
from .isometry_factory import instance_from_json, perturb_oracle, random_instance
from .reconstruction import OracleInconsistent, reconstruct

EXIT_OK, EXIT_INPUT, EXIT_INCONSISTENT, EXIT_RESIDUAL = 0, 2, 3, 4
SEED_ENV = "TINGLEY_LAB_SEED"


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    section: int = 2
    size: int = 3
    n: int = 4
    orbits: int = 2
    seed: int = 0
    tol: float = DEFAULT_TOL
    probes: int = 16
    samples: int = 1000
    trials: int = 200
    perturb: tuple[str, float] | None = None
    fmt: str = "json"
    out: str | None = None
    continuous_kappa: bool = False

    def validate(self) -> None:
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.probes < 4 or self.probes % 4:
            raise InputError("--probes must be a positive multiple of 4")
        if min(self.size, self.orbits, self.n) < 1:
            raise InputError("sizes must be at least 1")
        if self.section == 3 and self.n % 4:
            raise InputError(f"--n must be divisible by 4 for section 3 (got {self.n})")
        if self.samples < 0 or self.trials < 1:
            raise InputError("--samples must be >= 0 and --trials >= 1")


def _parse_perturb(text: str | None) -> tuple[str, float] | None:
    if text is None:
        return None
    point, sep, mag = text.rpartition(":")
    if not sep or not point:
        raise InputError("--perturb expects POINT:MAGNITUDE")
    try:
        value = float(mag)
    except ValueError:
        raise InputError(f"--perturb magnitude {mag!r} is not a number") from None
    if not 0 < value < 0.5:
        raise InputError("--perturb magnitude must lie in (0, 0.5)")
    return point, value


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV}={env!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tingley-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"random seed (falls back to ${SEED_ENV}, then 0)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--probes", type=int, default=16, help="size of the phase grid (multiple of 4)")
    common.add_argument("--samples", type=int, default=1000)
    common.add_argument("--format", dest="fmt", choices=("json", "text"), default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="write a random instance")
    gen.add_argument("--section", type=int, choices=(2, 3), default=2)
    gen.add_argument("--size", type=int, default=3, help="number of points (section 2)")
    gen.add_argument("--n", type=int, default=4, help="order of the acting group (section 3)")
    gen.add_argument("--orbits", type=int, default=2, help="number of orbits (section 3)")
    gen.add_argument("--continuous-kappa", action="store_true", help="draw weights from the whole circle")

    rec = sub.add_parser("reconstruct", parents=[common], help="recover the extension from an instance")
    rec.add_argument("instance", help="instance JSON file")
    rec.add_argument("--perturb", default=None, help="corrupt the oracle at the face probe of POINT, as POINT:MAG")

    suite = sub.add_parser("suite", parents=[common], help="run the acceptance matrix")
    suite.add_argument("--trials", type=int, default=200, help="instances per round-trip criterion")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        section=getattr(args, "section", 2),
        size=getattr(args, "size", 3),
        n=getattr(args, "n", 4),
        orbits=getattr(args, "orbits", 2),
        seed=_resolve_seed(args.seed),
        tol=args.tol,
        probes=args.probes,
        samples=args.samples,
        trials=getattr(args, "trials", 200),
        perturb=_parse_perturb(getattr(args, "perturb", None)),
        fmt=args.fmt,
        out=args.out,
        continuous_kappa=getattr(args, "continuous_kappa", False),
    )
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n")


def cmd_gen(cfg: RunConfig) -> int:
    size = cfg.size if cfg.section == 2 else cfg.orbits
    inst = random_instance(cfg.section, size=size, seed=cfg.seed, n=cfg.n, continuous_kappa=cfg.continuous_kappa)
    _emit(json.dumps(inst.to_json(), sort_keys=True, indent=2), cfg.out)
    return EXIT_OK


def _report_text(data: dict) -> str:
    lines = [f"section {data['section']}: {'ok' if data['ok'] else 'FAILED'}"]
    if "error" in data:
        lines.append(f"oracle inconsistent: {data['error']} (residual {data['residual']:.3g})")
        return "\n".join(lines)
    for x, y in data["phi"].items():
        lines.append(f"  {x} -> {y}")
    lines.append("orientation: " + " ".join(data["orientation"]))
    for k, v in data["residuals"].items():
        lines.append(f"residual {k}: {v:.3g}")
    return "\n".join(lines)


def cmd_reconstruct(cfg: RunConfig, path: str) -> int:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    inst = instance_from_json(load_json(text))
    oracle = inst.oracle
    if cfg.perturb is not None:
        point, mag = cfg.perturb
        coords = oracle.domain_coords
        if point not in coords:
            raise InputError(f"--perturb point {point!r} is not a domain {'point' if inst.section == 2 else 'orbit'}")
        site = np.zeros(len(coords), dtype=np.complex128)
        site[coords.index(point)] = 1.0
        oracle = perturb_oracle(oracle, site, mag)
    try:
        report = reconstruct(oracle, samples=cfg.samples, tol=cfg.tol, seed=cfg.seed, probes=cfg.probes)
    except OracleInconsistent as exc:
        data = {"section": inst.section, "ok": False, "error": str(exc), "residual": exc.residual, "seed": cfg.seed}
        code = EXIT_INCONSISTENT
    else:
        data = report.to_json()
        code = EXIT_OK if report.ok else EXIT_RESIDUAL
    if cfg.fmt == "json":
        _emit(json.dumps(data, sort_keys=True, indent=2), cfg.out)
    else:
        _emit(_report_text(data), cfg.out)
    return code


def cmd_suite(cfg: RunConfig) -> int:
    from .acceptance import run_suite

    scale = min(cfg.trials, 200) / 200
    results, elapsed = run_suite(
        seed=cfg.seed,
        trials=cfg.trials,
        samples=cfg.samples,
        lemma_inputs=max(1, round(1000 * scale)),
        perturbed=max(1, round(50 * scale)),
    )
    if cfg.fmt == "json":
        payload = {
            "seed": cfg.seed,
            "seconds": elapsed,
            "criteria": [
                {"index": r.index, "name": r.name, "passed": r.passed, "worst": r.worst, "detail": r.detail}
                for r in results
            ],
        }
        _emit(json.dumps(payload, indent=2), cfg.out)
    else:
        lines = [r.line() for r in results] + [f"total {elapsed:.2f}s"]
        _emit("\n".join(lines), cfg.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_RESIDUAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        if cfg.command == "gen":
            return cmd_gen(cfg)
        if cfg.command == "reconstruct":
            return cmd_reconstruct(cfg, args.instance)
        return cmd_suite(cfg)
    except (InputError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

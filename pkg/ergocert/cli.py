"""
ergocert command line.

Usage:
    ergocert analyze --model F --t-max R --grid R --tol R [--out D]
    ergocert certify --model F --t0 R --t-max R --tol R [--grid R] [--out D]
    ergocert sweep --family {random-ctmc,pdmp,rotation,atom} --count N --seed N --out D

Exit codes: 0 success, 2 invalid input (including reducible models where
irreducibility is required), 3 internal inconsistency or failed audit.
Random instances use ``numpy.random.Generator(PCG64(seed))``.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .certify import verify_proof_chain
from .config import DEFAULT_TOL
from .errors import (
    AuditError,
    ConsistencyError,
    ErgocertError,
    NotIrreducibleError,
    SearchExhaustedError,
    ValidationError,
)
from .evolution import CesaroEvaluator, SemigroupEvaluator
from .lattice import op_distance
from .logging_utils import configure_logging
from .lower_bounds import (
    ConvergenceCertificate,
    certify_uniform_convergence,
    doeblin_mass,
    find_certificate,
)
from .models import (
    Model,
    build_pdmp,
    build_rotation,
    is_grid_model,
    is_irreducible,
    random_atom_model,
    random_irreducible_ctmc,
)
from .profiler import StageProfiler, create_profiler
from .serialization import (
    SeriesRow,
    certificate_to_dict,
    dump_json,
    load_model,
    model_to_dict,
    proof_chain_to_dict,
    spectral_to_dict,
    suite_to_dict,
    write_bundle,
)
from .spectral import corollary_suite, limit_projection, spectral_report
from .workers import map_ordered

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3

FAMILIES = ("random-ctmc", "pdmp", "rotation", "atom")


def time_grid(model: Model, t_max: float, step: float) -> List[float]:
    """
    Times ``step, 2·step, ..., <= t_max``.

    Raises:
        ValidationError: If the step is not positive, or not an integer on a
            grid model
    """
    if not (step > 0 and math.isfinite(step)) or not t_max > 0:
        raise ValidationError(f"need grid step > 0 and t_max > 0, got {step}, {t_max}")
    if is_grid_model(model) and abs(step - round(step)) > 1e-12:
        raise ValidationError(f"{model!r} runs on integer times; grid step {step} is off-grid")
    count = int(math.floor(t_max / step + 1e-9))
    if count < 1:
        raise ValidationError(f"t_max={t_max} is shorter than one grid step {step}")
    if is_grid_model(model):
        return [float(k * round(step)) for k in range(1, count + 1)]
    return [k * step for k in range(1, count + 1)]


def build_series(
    model: Model, times: Sequence[float], evaluator: Optional[SemigroupEvaluator] = None
) -> List[SeriesRow]:
    ev = evaluator or SemigroupEvaluator(model)
    cesaro = CesaroEvaluator(model)
    projection = limit_projection(model)
    return [
        SeriesRow(
            t=t,
            op_distance_to_P=op_distance(ev.at(t), projection),
            cesaro_distance=op_distance(cesaro.at(t), projection),
            doeblin_mass=doeblin_mass(model, t, ev),
        )
        for t in times
    ]


def _require_irreducible(model: Model) -> None:
    if not is_irreducible(model):
        raise NotIrreducibleError(f"{model!r} is reducible")


def run_analyze(
    model: Model, t_max: float, grid: float, tol: float, profiler: StageProfiler
) -> Tuple[Dict[str, Any], List[SeriesRow]]:
    """Spectral report, equivalence suite, certificate sweep and time series."""
    _require_irreducible(model)
    times = time_grid(model, t_max, grid)
    ev = SemigroupEvaluator(model)
    with profiler.stage("spectral"):
        spectral = spectral_report(model)
        suite = corollary_suite(model, tol=tol)
    with profiler.stage("certificate"):
        certificate = find_certificate(model, times, times, tol, ev)
    with profiler.stage("series"):
        rows = build_series(model, times, ev)
    report = {
        "command": "analyze",
        "model": model_to_dict(model),
        "parameters": {"t_max": t_max, "grid": grid, "tol": tol},
        "spectral": spectral_to_dict(spectral),
        "suite": suite_to_dict(suite),
        "certificate": certificate_to_dict(certificate),
    }
    return report, rows


def run_certify(
    model: Model,
    t0: float,
    t_max: float,
    grid: float,
    tol: float,
    profiler: StageProfiler,
) -> Tuple[Dict[str, Any], List[SeriesRow], bool]:
    """
    Doeblin certificate and proof chain at ``t0``.

    Returns:
        Report, series rows and whether the outcome is consistent: both
        succeed, or no certificate exists and the chain is inapplicable
    """
    _require_irreducible(model)
    times = time_grid(model, t_max, grid)
    ev = SemigroupEvaluator(model)
    with profiler.stage("certificate"):
        certificate = certify_uniform_convergence(model, t0, times, tol, ev)
    with profiler.stage("proof chain"):
        chain = verify_proof_chain(model, t0, times, tol, evaluator=ev)
    with profiler.stage("series"):
        rows = build_series(model, times, ev)
    certified = isinstance(certificate, ConvergenceCertificate)
    if certified and chain.passed:
        verdict = "uniform convergence certified"
    elif not certified and not chain.applicable:
        verdict = "no certificate, hypothesis not met"
    else:
        verdict = "inconsistent"
    report = {
        "command": "certify",
        "model": model_to_dict(model),
        "parameters": {"t0": t0, "t_max": t_max, "grid": grid, "tol": tol},
        "certificate": certificate_to_dict(certificate),
        "proof_chain": proof_chain_to_dict(chain),
        "verdict": verdict,
    }
    return report, rows, verdict != "inconsistent"


def family_model(family: str, seed: int) -> Model:
    """One seeded instance of a sweep family."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if family == "random-ctmc":
        n = int(rng.integers(2, 13))
        return random_irreducible_ctmc(n, float(rng.uniform(0.2, 0.8)), int(rng.integers(0, 2**31)))
    if family == "pdmp":
        return build_pdmp(int(rng.integers(3, 17)), float(rng.uniform(0.5, 2.0)))
    if family == "rotation":
        return build_rotation(int(rng.integers(3, 9)))
    if family == "atom":
        return random_atom_model(int(rng.integers(0, 2**31)))
    raise ValidationError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def instance_grid(model: Model) -> List[float]:
    """Time grid long enough for the proof-chain audit of one instance."""
    gap = spectral_report(model).spectral_gap
    if is_grid_model(model):
        horizon = 4 * model.space.n if gap <= 0 else min(200.0, max(8.0, 60.0 / gap))
        return [float(k) for k in range(1, int(math.ceil(horizon)) + 1)]
    # The audit starts near 2t₁ + t₂, a few dozen relaxation times in.
    horizon = min(2000.0, max(8.0, 60.0 / gap))
    step = horizon / 200
    return [k * step for k in range(1, 201)]


def run_instance(family: str, k: int, seed: int, tol: float = DEFAULT_TOL) -> Dict[str, Any]:
    """Analyse one sweep instance; failures are recorded, never raised."""
    record: Dict[str, Any] = {"index": k, "seed": seed}
    try:
        model = family_model(family, seed)
        times = instance_grid(model)
        ev = SemigroupEvaluator(model)
        certificate = find_certificate(model, times[:20], times, tol, ev)
        certified = isinstance(certificate, ConvergenceCertificate)
        t0 = certificate.t0 if certified else times[0]
        chain = verify_proof_chain(model, t0, times, tol, evaluator=ev)
        if certified:
            consistent = chain.passed
        else:
            consistent = not chain.applicable
        record.update(
            model=model_to_dict(model),
            certificate=certificate_to_dict(certificate),
            proof_chain=proof_chain_to_dict(chain),
            verdict="uniform convergence" if certified else "no uniform convergence",
            passed=consistent,
        )
    except ErgocertError as e:
        record.update(passed=False, error=f"{type(e).__name__}: {e}")
    return record


def run_sweep(
    family: str, count: int, seed: int, out_dir: Path, max_workers: Optional[int] = None
) -> Dict[str, Any]:
    """
    Analyse ``count`` seeded instances and write the summary.

    Instance seeds are drawn from one PCG64 stream, so the summary only
    depends on ``(family, count, seed)``.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    rng = np.random.Generator(np.random.PCG64(seed))
    seeds = [int(s) for s in rng.integers(0, 2**31, size=count)]
    records = map_ordered(
        lambda item: run_instance(family, item[0], item[1]), list(enumerate(seeds)), max_workers
    )
    for record in records:
        write_bundle(out_dir / f"instance-{record['index']}", record)
    passed = sum(1 for r in records if r["passed"])
    summary = {
        "family": family,
        "count": count,
        "seed": seed,
        "passed": passed,
        "pass_rate": passed / count,
        "failures": [r["seed"] for r in records if not r["passed"]],
        "instances": [
            {
                "index": r["index"],
                "seed": r["seed"],
                "passed": r["passed"],
                "verdict": r.get("verdict"),
                "error": r.get("error"),
            }
            for r in records
        ],
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(dump_json(summary), encoding="utf-8")
    return summary


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, type=Path, help="model JSON file")
    parser.add_argument("--t-max", required=True, type=float, help="last time of the grid")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help="audit tolerance")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergocert",
        description="Uniform convergence certificates for finite stochastic semigroups",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--profile", action="store_true", help="print stage timings")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="spectral suite, certificate sweep, time series")
    _add_model_args(analyze)
    analyze.add_argument("--grid", required=True, type=float, help="grid step")

    certify = sub.add_parser("certify", help="Doeblin certificate and proof chain")
    _add_model_args(certify)
    certify.add_argument("--t0", required=True, type=float, help="lower-bound time")
    certify.add_argument("--grid", type=float, default=None, help="grid step (default: t0)")

    sweep = sub.add_parser("sweep", help="batch analysis of a seeded family")
    sweep.add_argument("--family", required=True, choices=FAMILIES)
    sweep.add_argument("--count", required=True, type=int)
    sweep.add_argument("--seed", required=True, type=int)
    sweep.add_argument("--out", required=True, type=Path)
    return parser


def _dispatch(args: argparse.Namespace, profiler: StageProfiler) -> int:
    if args.command == "sweep":
        summary = run_sweep(args.family, args.count, args.seed, args.out)
        print(f"{summary['passed']}/{summary['count']} instances passed ({args.family})")
        if summary["failures"]:
            print(f"failing seeds: {summary['failures']}")
            return EXIT_INCONSISTENT
        return EXIT_OK

    model = load_model(args.model)
    if args.command == "analyze":
        report, rows = run_analyze(model, args.t_max, args.grid, args.tol, profiler)
        write_bundle(args.out, report, rows)
        cert = report["certificate"]
        if cert["certified"]:
            print(f"certified at t0={cert['t0']:g} with mass {cert['eta']:.6f}")
        else:
            print(f"no certificate on the grid (best mass {cert['eta']:.3e})")
        return EXIT_OK

    grid = args.grid if args.grid is not None else args.t0
    report, rows, consistent = run_certify(model, args.t0, args.t_max, grid, args.tol, profiler)
    write_bundle(args.out, report, rows)
    print(report["verdict"])
    if not consistent:
        chain = report["proof_chain"]
        print(f"proof chain failed at {chain['failed_step']}")
        return EXIT_INCONSISTENT
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)
    profiler = create_profiler(args.profile)
    try:
        code = _dispatch(args, profiler)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (AuditError, ConsistencyError, SearchExhaustedError) as e:
        print(f"inconsistent: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except ErgocertError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.profile:
        profiler.print_report()
    return code


__all__ = [
    "main",
    "build_parser",
    "time_grid",
    "build_series",
    "run_analyze",
    "run_certify",
    "run_sweep",
    "run_instance",
    "family_model",
    "instance_grid",
]

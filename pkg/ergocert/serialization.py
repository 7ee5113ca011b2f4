"""
Model files and report bundles.

Model files are JSON documents validated against MODEL_SCHEMA before any
object is built. Reports are canonical JSON (sorted keys, two-space indent,
shortest round-trip floats) and a CSV time series with 17 significant digits.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import jsonschema
import numpy as np

from .certify import ProofChainReport, ProofStep
from .errors import ValidationError
from .lattice import Density, StateSpace
from .lower_bounds import ConvergenceCertificate, NoCertificate
from .models import (
    CtmcModel,
    DtmcModel,
    Model,
    PdmpModel,
    build_ctmc,
    build_dtmc,
    build_pdmp,
)
from .spectral import CorollarySuite, SpectralReport

logger = logging.getLogger(__name__)

SERIES_HEADER = ("t", "op_distance_to_P", "cesaro_distance", "doeblin_mass")

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}

MODEL_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ctmc", "dtmc", "pdmp"]},
        "weights": _vector,
        "rates": _matrix,
        "step": _matrix,
        "pdmp": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "jump_rate"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "jump_rate": {"type": "number", "minimum": 0},
                "jump_target": _vector,
            },
        },
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "ctmc"}}},
            "then": {
                "required": ["weights", "rates"],
                "not": {"anyOf": [{"required": ["step"]}, {"required": ["pdmp"]}]},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "dtmc"}}},
            "then": {
                "required": ["weights", "step"],
                "not": {"anyOf": [{"required": ["rates"]}, {"required": ["pdmp"]}]},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "pdmp"}}},
            "then": {
                "required": ["pdmp"],
                "not": {"anyOf": [{"required": ["rates"]}, {"required": ["step"]}]},
            },
        },
    ],
}

_validator = jsonschema.Draft7Validator(MODEL_SCHEMA)


def parse_model_spec(document: Mapping[str, Any]) -> Model:
    """
    Build a model from a decoded model document.

    Raises:
        ValidationError: On schema violations or invalid model data
    """
    errors = sorted(_validator.iter_errors(document), key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.path) or "<root>"
        raise ValidationError(f"model file invalid at {where}: {first.message}")

    kind = document["kind"]
    if kind == "pdmp":
        spec = document["pdmp"]
        n = int(spec["n"])
        if "weights" in document and not np.array_equal(document["weights"], np.ones(n)):
            raise ValidationError("pdmp cells have unit mass; weights must be all ones")
        return build_pdmp(n, float(spec["jump_rate"]), spec.get("jump_target"))
    space = StateSpace(np.asarray(document["weights"], dtype=float))
    if kind == "ctmc":
        return build_ctmc(space, np.asarray(document["rates"], dtype=float))
    return build_dtmc(space, np.asarray(document["step"], dtype=float))


def load_model(path: Union[str, Path]) -> Model:
    """
    Read and validate a model file.

    Raises:
        ValidationError: If the file is unreadable, not JSON or not a valid model
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read model file {path}: {e}") from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"model file {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ValidationError(f"model file {path} must hold a JSON object")
    return parse_model_spec(document)


def model_to_dict(model: Model) -> Dict[str, Any]:
    if isinstance(model, PdmpModel):
        return {
            "kind": "pdmp",
            "pdmp": {
                "n": model.n,
                "jump_rate": float(model.jump_rate),
                "jump_target": model.jump_target.values.tolist(),
            },
        }
    if isinstance(model, DtmcModel):
        return {
            "kind": "dtmc",
            "weights": model.space.weights.tolist(),
            "step": model.step.entries.tolist(),
        }
    assert isinstance(model, CtmcModel)
    return {
        "kind": "ctmc",
        "weights": model.space.weights.tolist(),
        "rates": model.rates.tolist(),
    }


def dump_json(data: Any) -> str:
    """Canonical JSON text with a trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def canonical_model_json(model: Model) -> str:
    """Canonical model file; parsing it back yields an equal model."""
    return dump_json(model_to_dict(model))


def _num(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _vec(d: Optional[Density]) -> Optional[List[float]]:
    return None if d is None else d.values.tolist()


def certificate_to_dict(result: Union[ConvergenceCertificate, NoCertificate]) -> Dict[str, Any]:
    if isinstance(result, NoCertificate):
        return {
            "certified": False,
            "t0": result.t0,
            "eta": result.eta,
            "reason": result.reason,
        }
    return {
        "certified": True,
        "t0": result.t0,
        "eta": result.eta,
        "h": _vec(result.h),
        "stationary": _vec(result.stationary),
        "rate_bound": {
            "c": result.rate_bound.c,
            "rho": result.rate_bound.rho,
            "t0": result.rate_bound.t0,
        },
        "min_margin": _num(result.min_margin),
        "audit": [
            {
                "t": r.time,
                "deficiency": r.deficiency,
                "distance": r.distance,
                "bound": r.bound,
                "margin": r.margin,
            }
            for r in result.audit
        ],
    }


def _step_to_dict(step: ProofStep) -> Dict[str, Any]:
    return {
        "step": step.step,
        "passed": step.passed,
        "value": _num(step.value),
        "margin": _num(step.margin),
        "detail": step.detail,
    }


def proof_chain_to_dict(report: ProofChainReport) -> Dict[str, Any]:
    return {
        "t0": report.t0,
        "applicable": report.applicable,
        "passed": report.passed,
        "failed_step": report.failed_step,
        "delta": report.delta,
        "t1": report.t1,
        "t2": report.t2,
        "audit_start": report.audit_start,
        "cesaro_distance": _num(report.cesaro_distance),
        "projection_norm": _num(report.projection_norm),
        "contraction_norm": _num(report.contraction_norm),
        "extreme_times": list(report.extreme_times),
        "lower_bound": _vec(report.lower_bound),
        "steps": [_step_to_dict(s) for s in report.steps],
    }


def _complex_pairs(values: Iterable[complex]) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


def spectral_to_dict(report: SpectralReport) -> Dict[str, Any]:
    return {
        "eigenvalues": _complex_pairs(report.eigenvalues),
        "spectral_gap": _num(report.spectral_gap),
        "zero_multiplicity": list(report.zero_multiplicity),
        "peripheral": _complex_pairs(report.peripheral),
        "one_step": report.one_step,
    }


def suite_to_dict(suite: CorollarySuite) -> Dict[str, Any]:
    return {
        "hypothesis_met": suite.hypothesis_met,
        "reason": suite.reason,
        "conditions": dict(suite.conditions),
        "agree": suite.agree,
        "evidence": {k: _num(v) for k, v in suite.evidence.items()},
    }


@dataclass(frozen=True)
class SeriesRow:
    t: float
    op_distance_to_P: float
    cesaro_distance: float
    doeblin_mass: float


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def series_csv(rows: Sequence[SeriesRow]) -> str:
    """CSV text for a time series, rows sorted by ``t``."""
    lines = [",".join(SERIES_HEADER)]
    for r in sorted(rows, key=lambda r: r.t):
        lines.append(
            ",".join(_fmt(v) for v in (r.t, r.op_distance_to_P, r.cesaro_distance, r.doeblin_mass))
        )
    return "\n".join(lines) + "\n"


def read_series_csv(path: Union[str, Path]) -> List[SeriesRow]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [SeriesRow(*(float(row[k]) for k in SERIES_HEADER)) for row in reader]


def write_bundle(
    out_dir: Union[str, Path],
    report: Mapping[str, Any],
    rows: Optional[Sequence[SeriesRow]] = None,
) -> Path:
    """
    Write ``report.json`` (and ``series.csv`` when rows are given).

    Returns:
        The output directory
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dump_json(report), encoding="utf-8")
    if rows is not None:
        (out / "series.csv").write_text(series_csv(rows), encoding="utf-8")
    logger.debug("wrote bundle to %s", out)
    return out


__all__ = [
    "MODEL_SCHEMA",
    "SERIES_HEADER",
    "SeriesRow",
    "parse_model_spec",
    "load_model",
    "model_to_dict",
    "dump_json",
    "canonical_model_json",
    "certificate_to_dict",
    "proof_chain_to_dict",
    "spectral_to_dict",
    "suite_to_dict",
    "series_csv",
    "read_series_csv",
    "write_bundle",
]

"""
Step-by-step verification of the compact-part argument for uniform convergence.

Given ``T_{t₀} = K + R`` (kernel part plus singular part) and the stationary
density ``g``, the chain is:

1. ``δ = ‖Kg‖ > 0``;
2. some ``t₁ > t₀`` has ``‖C_{t₁} − P‖ <= δ/2``;
3. ``‖R_{t₁}P‖ = 1 − δ`` and hence ``‖R_{t₁}C_{t₁}‖ <= 1 − δ/2``;
4. each extreme point ``e_j/μ_j`` has a time ``s ∈ [t₁, 2t₁]`` with
   ``‖R_s e_j/μ_j‖ <= 1 − δ/2``;
5. past ``t₂`` the kernel part has mixed: ``‖(T_t − P)K‖ <= audit_tol``;
6. ``(δ/2)g`` is a lower bound for every ``t >= 2t₁ + t₂``.

Each step is recorded with its margin; a failing step ends the chain.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOL
from .errors import SearchExhaustedError, ValidationError
from .evolution import CesaroEvaluator, SemigroupEvaluator, split
from .lattice import (
    Density,
    KernelOperator,
    StructuredOperator,
    apply,
    compose,
    dense,
    indicator,
    l1_norm,
    op_distance,
    op_meet,
    op_norm,
    rank_one,
)
from .lower_bounds import deficiency, doeblin_mass
from .models import Model
from .spectral import stationary_density

logger = logging.getLogger(__name__)

DEFAULT_AUDIT_TOL = 1e-8

STEP_IDS = (
    "stationary",
    "kernel_mass",
    "cesaro_window",
    "projection_identity",
    "cesaro_contraction",
    "extreme_times",
    "compact_uniformity",
    "lower_bound_audit",
)


@dataclass(frozen=True)
class ProofStep:
    """Outcome of one step; ``margin`` is positive when the step holds with room."""

    step: str
    passed: bool
    value: float
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ProofChainReport:
    t0: float
    delta: float
    applicable: bool
    steps: Tuple[ProofStep, ...]
    kernel: Optional[KernelOperator] = None
    remainder: Optional[StructuredOperator] = None
    stationary: Optional[Density] = None
    t1: Optional[float] = None
    t2: Optional[float] = None
    cesaro_distance: Optional[float] = None
    projection_norm: Optional[float] = None
    contraction_norm: Optional[float] = None
    extreme_times: Tuple[float, ...] = field(default_factory=tuple)
    lower_bound: Optional[Density] = None
    meet: Optional[KernelOperator] = None

    @property
    def passed(self) -> bool:
        return self.applicable and len(self.steps) == len(STEP_IDS) and all(
            s.passed for s in self.steps
        )

    @property
    def failed_step(self) -> Optional[str]:
        for s in self.steps:
            if not s.passed:
                return s.step
        return None

    @property
    def audit_start(self) -> Optional[float]:
        if self.t1 is None or self.t2 is None:
            return None
        return 2.0 * self.t1 + self.t2

    def margins(self) -> dict:
        return {s.step: s.margin for s in self.steps}


@dataclass(frozen=True)
class CompactWitness:
    """``(T_s(J∧G))²`` with the first non-zero column and its domination flag."""

    operator: KernelOperator
    s: float
    column: int
    dominated: Optional[bool] = None


def meet_with_projection(
    model: Model, t0: float, evaluator: Optional[SemigroupEvaluator] = None
) -> KernelOperator:
    """
    ``J = T_{t₀} ∧ P``, taken on the kernel part of ``T_{t₀}``.

    A singular part never meets the kernel operator ``P``, so a pure rotation
    gives the zero operator at every time.
    """
    ev = evaluator or SemigroupEvaluator(model)
    kernel, _ = split(ev.at(t0))
    projection = rank_one(stationary_density(model).g)
    return op_meet(_clip(kernel), projection)


def _clip(op: KernelOperator) -> KernelOperator:
    # Uniformization and closed forms are entrywise nonnegative up to rounding.
    return KernelOperator(op.space, np.maximum(op.entries, 0.0))


def squared_compact_construction(
    model: Model,
    j: KernelOperator,
    g_major: Optional[KernelOperator],
    s_grid: Sequence[float],
    t0: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> CompactWitness:
    """
    Smallest ``s`` on the grid with ``(T_s(J∧G))² ≠ 0``.

    Args:
        model: Model generating ``T``
        j: Positive kernel operator dominated by ``T_{t₀}``
        g_major: Positive finite-rank majorant; defaults to ``P = 𝟙⊗g``
        s_grid: Candidate values of ``s``
        t0: When given, the witness is checked against ``T_{2(s+t₀)}``
        tol: Entrywise tolerance of the domination check

    Raises:
        SearchExhaustedError: If every grid point gives the zero operator
    """
    ev = evaluator or SemigroupEvaluator(model)
    if g_major is None:
        g_major = rank_one(stationary_density(model).g)
    base = op_meet(j, g_major)
    tried: List[float] = []
    for s in sorted(set(float(x) for x in s_grid)):
        tried.append(s)
        inner = compose(ev.at(s), base)
        square = compose(inner, inner).kernel
        if square.is_zero:
            continue
        column = int(np.argmax(square.column_masses()))
        dominated = None
        if t0 is not None:
            bound = dense(ev.at(2.0 * (s + t0)))
            dominated = bool(np.all(square.entries <= bound + tol))
        logger.debug("compact witness at s=%g, column %d", s, column)
        return CompactWitness(operator=square, s=s, column=column, dominated=dominated)
    raise SearchExhaustedError(
        "no grid point gives a non-zero squared operator",
        {"grid": tried, "meet_mass": float(np.sum(base.column_masses()))},
    )


def _grid_after(grid: Sequence[float], start: float, strict: bool = False) -> List[float]:
    return [t for t in grid if (t > start if strict else t >= start)]


def verify_proof_chain(
    model: Model,
    t0: float,
    grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    audit_tol: float = DEFAULT_AUDIT_TOL,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> ProofChainReport:
    """
    Run the chain on explicit time grids.

    Args:
        model: Irreducible model
        t0: Time of the kernel/singular split
        grid: Times used for every search and for the final audit
        tol: Tolerance of the norm identities and inequalities
        audit_tol: Threshold for ``‖(T_t − P)K‖`` and for the final deficiency

    Returns:
        The report; ``passed`` is False with ``failed_step`` set when a step
        fails, and ``applicable`` is False when ``δ = 0``

    Raises:
        NotIrreducibleError: If the stationary density is not unique
    """
    if t0 <= 0:
        raise ValidationError(f"t0 must be > 0, got {t0}")
    times = sorted(set(float(t) for t in grid))
    ev = evaluator or SemigroupEvaluator(model)
    cesaro = CesaroEvaluator(model)
    steps: List[ProofStep] = []

    g = stationary_density(model).g
    projection = rank_one(g)
    steps.append(ProofStep("stationary", True, g.mass, 0.0))

    kernel, remainder = split(ev.at(t0))
    delta = l1_norm(apply(kernel, g))
    partial: Dict[str, Any] = dict(
        t0=t0, delta=delta, kernel=kernel, remainder=remainder, stationary=g
    )
    if delta <= tol:
        steps.append(ProofStep("kernel_mass", False, delta, delta - tol, "kernel part zero"))
        return ProofChainReport(applicable=False, steps=tuple(steps), **partial)
    steps.append(ProofStep("kernel_mass", True, delta, delta - tol))
    partial["meet"] = meet_with_projection(model, t0, ev)

    def done(**extra: Any) -> ProofChainReport:
        return ProofChainReport(applicable=True, steps=tuple(steps), **partial, **extra)

    t1 = None
    best = np.inf
    for t in _grid_after(times, t0, strict=True):
        distance = op_distance(cesaro.at(t), projection)
        best = min(best, distance)
        if distance <= delta / 2:
            t1, cesaro_distance = t, distance
            break
    if t1 is None:
        steps.append(ProofStep("cesaro_window", False, best, delta / 2 - best, "grid exhausted"))
        return done()
    steps.append(ProofStep("cesaro_window", True, cesaro_distance, delta / 2 - cesaro_distance))
    partial.update(t1=t1, cesaro_distance=cesaro_distance)

    _, r_t1 = ev.decomposition(t0, t1)
    projection_norm = op_norm(compose(r_t1, projection))
    gap = abs(projection_norm - (1.0 - delta))
    steps.append(
        ProofStep("projection_identity", gap <= tol, projection_norm, tol - gap)
    )
    partial["projection_norm"] = projection_norm
    if gap > tol:
        return done()

    contraction = op_norm(compose(r_t1, cesaro.at(t1)))
    limit = 1.0 - delta / 2 + tol
    steps.append(
        ProofStep("cesaro_contraction", contraction <= limit, contraction, limit - contraction)
    )
    partial["contraction_norm"] = contraction
    if contraction > limit:
        return done()

    window = [t for t in times if t1 <= t <= 2.0 * t1]
    extreme: List[float] = []
    worst = np.inf
    for col in range(model.space.n):
        f = indicator(model.space, col)
        found = None
        smallest = np.inf
        for s in window:
            _, r_s = ev.decomposition(t0, s)
            mass = l1_norm(apply(r_s, f))
            smallest = min(smallest, mass)
            if mass <= limit:
                found = s
                break
        worst = min(worst, limit - smallest)
        if found is None:
            steps.append(
                ProofStep("extreme_times", False, smallest, limit - smallest, f"cell {col}")
            )
            return done(extreme_times=tuple(extreme))
        extreme.append(found)
    steps.append(ProofStep("extreme_times", True, max(extreme), worst))
    partial["extreme_times"] = tuple(extreme)

    t2 = None
    mixed = np.inf
    for u in [0.0] + [t for t in times if t > 0]:
        distance = op_distance(compose(ev.at(u), kernel), compose(projection, kernel))
        mixed = min(mixed, distance)
        if distance <= audit_tol:
            t2 = u
            break
    if t2 is None:
        steps.append(
            ProofStep("compact_uniformity", False, mixed, audit_tol - mixed, "grid exhausted")
        )
        return done()
    steps.append(ProofStep("compact_uniformity", True, mixed, audit_tol - mixed))
    partial["t2"] = t2

    bound = g.scaled(delta / 2)
    partial["lower_bound"] = bound
    audit_times = _grid_after(times, 2.0 * t1 + t2)
    if not audit_times:
        steps.append(
            ProofStep("lower_bound_audit", False, np.nan, -np.inf, "grid ends before audit start")
        )
        return done()
    worst_def = max(deficiency(ev.at(t), bound, t).deficiency for t in audit_times)
    threshold = audit_tol + tol
    steps.append(
        ProofStep("lower_bound_audit", worst_def <= threshold, worst_def, threshold - worst_def)
    )
    report = done()
    logger.info("proof chain for %r at t0=%g: %s", model, t0, "passed" if report.passed else report.failed_step)
    return report


@dataclass(frozen=True)
class BoundComparison:
    proof_mass: float
    doeblin_mass: float
    time: float

    def holds(self, tol: float = DEFAULT_AUDIT_TOL) -> bool:
        return self.proof_mass <= self.doeblin_mass + tol


def proof_bound_vs_doeblin(
    report: ProofChainReport,
    model: Model,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> BoundComparison:
    """
    Compare the proof's lower-bound mass ``δ/2`` with the Doeblin mass at the
    audit start ``2t₁ + t₂``.

    Raises:
        ValidationError: If the report never reached the audit
    """
    start = report.audit_start
    if start is None:
        raise ValidationError("proof chain did not reach the lower-bound audit")
    return BoundComparison(
        proof_mass=report.delta / 2,
        doeblin_mass=doeblin_mass(model, start, evaluator),
        time=start,
    )


__all__ = [
    "STEP_IDS",
    "DEFAULT_AUDIT_TOL",
    "ProofStep",
    "ProofChainReport",
    "CompactWitness",
    "BoundComparison",
    "meet_with_projection",
    "squared_compact_construction",
    "verify_proof_chain",
    "proof_bound_vs_doeblin",
]

"""
Deficiency functionals, maximal lower bounds and Doeblin-type certificates.

The deficiency of a candidate density ``h`` against ``T`` is
``sup{‖(Tf − h)⁻‖ : 0 ≤ f, ‖f‖ = 1}``. The map ``f ↦ ‖(Tf − h)⁻‖`` is convex,
so the supremum is attained at a normalized cell indicator ``e_j/μ_j``, i.e.
at one of the columns of ``T`` divided by ``μ_j``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_TOL
from .errors import AuditError, ValidationError
from .evolution import SemigroupEvaluator
from .lattice import (
    Density,
    KernelOperator,
    Operator,
    apply,
    dense,
    l1_norm,
    op_distance,
    rank_one,
)
from .models import Model
from .spectral import stationary_density

logger = logging.getLogger(__name__)

# Audit margins below this fraction of the bound are logged as warnings.
NEAR_MARGIN = 1e-9


@dataclass(frozen=True)
class DeficiencyReport:
    """Deficiency of ``h`` against one operator, with the attaining column."""

    h: Density
    deficiency: float
    column: int
    time: Optional[float] = None


@dataclass(frozen=True)
class RateBound:
    """The bound ``‖T_t − P‖ ≤ c·ρ^{⌊t/t₀⌋}``."""

    c: float
    rho: float
    t0: float

    def __call__(self, t: float) -> float:
        return self.c * self.rho ** math.floor(t / self.t0)


@dataclass(frozen=True)
class AuditRecord:
    """One audit-grid evaluation of a certificate."""

    time: float
    deficiency: float
    distance: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.distance


@dataclass(frozen=True)
class ConvergenceCertificate:
    """
    Witness of uniform convergence: a uniform lower bound ``h`` of mass ``η``
    found at ``t₀``, the rank-one limit ``P = 𝟙⊗g`` and the audited rate.
    """

    h: Density
    t0: float
    eta: float
    rate_bound: RateBound
    stationary: Density
    projection: KernelOperator
    audit: Tuple[AuditRecord, ...] = field(default_factory=tuple)

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.audit), default=math.inf)


@dataclass(frozen=True)
class NoCertificate:
    """No lower bound of positive mass at ``t₀``; inconclusive on its own."""

    t0: float
    eta: float
    reason: str


CertificateResult = Union[ConvergenceCertificate, NoCertificate]


def _check_lower_bound(h: Density) -> None:
    if np.any(h.values < 0):
        raise ValidationError("candidate lower bound must be a positive density")


def _normalized_columns(op: Operator) -> np.ndarray:
    return dense(op) / op.space.weights[None, :]


def deficiency(op: Operator, h: Density, time: Optional[float] = None) -> DeficiencyReport:
    """
    ``max_j ‖(T(e_j/μ_j) − h)⁻‖₁``.

    Raises:
        ValidationError: If ``h`` has a negative entry
    """
    _check_lower_bound(h)
    shortfall = np.maximum(h.values[:, None] - _normalized_columns(op), 0.0)
    per_column = op.space.weights @ shortfall
    j = int(np.argmax(per_column))
    return DeficiencyReport(h=h, deficiency=float(per_column[j]), column=j, time=time)


def maximal_lower_bound_at(op: Operator) -> Density:
    """Largest density of zero deficiency against ``op``: the row-wise column minimum."""
    h = np.min(_normalized_columns(op), axis=1)
    return Density(op.space, np.maximum(h, 0.0))


def doeblin_mass(
    model: Model, t: float, evaluator: Optional[SemigroupEvaluator] = None
) -> float:
    """Mass of the maximal lower bound of ``T_t``."""
    ev = evaluator or SemigroupEvaluator(model)
    return l1_norm(maximal_lower_bound_at(ev.at(t)))


def certify_uniform_convergence(
    model: Model,
    t0: float,
    audit_grid: Iterable[float],
    tol: float = DEFAULT_TOL,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> CertificateResult:
    """
    Certify ``‖T_t − P‖ ≤ 2(1 − η)^{⌊t/t₀⌋}`` from the maximal lower bound at ``t₀``.

    Args:
        model: Model to certify
        t0: Lower-bound time (> 0, on the model grid)
        audit_grid: Times at which the certificate is audited; times before
            ``t0`` are ignored
        tol: Tolerance for the deficiency audit and the rate-bound audit
        evaluator: Optional shared evaluator for ``model``

    Returns:
        A ConvergenceCertificate, or NoCertificate when ``η <= tol``

    Raises:
        NotIrreducibleError: If the stationary density is not unique
        AuditError: If the lower bound or the rate bound fails at an audit time
    """
    if t0 <= 0:
        raise ValidationError(f"t0 must be > 0, got {t0}")
    ev = evaluator or SemigroupEvaluator(model)
    h = maximal_lower_bound_at(ev.at(t0))
    eta = l1_norm(h)
    if eta <= tol:
        logger.debug("no certificate at t0=%g: mass %.3e", t0, eta)
        return NoCertificate(t0=t0, eta=eta, reason="maximal lower bound has zero mass")

    g = stationary_density(model).g
    projection = rank_one(g)
    rate = RateBound(c=2.0, rho=max(0.0, 1.0 - eta), t0=t0)

    records: List[AuditRecord] = []
    for t in sorted(set(float(x) for x in audit_grid)):
        if t < t0:
            continue
        op = ev.at(t)
        d = deficiency(op, h, time=t).deficiency
        if d > tol:
            raise AuditError("lower bound audit failed", t, tol - d)
        record = AuditRecord(time=t, deficiency=d, distance=op_distance(op, projection), bound=rate(t))
        if record.margin + tol < 0:
            raise AuditError("rate bound audit failed", t, record.margin)
        if record.margin < NEAR_MARGIN * record.bound:
            logger.warning("rate bound margin %.3e at t=%g is near tolerance", record.margin, t)
        records.append(record)

    logger.info("certified %r at t0=%g with mass %.6f", model, t0, eta)
    return ConvergenceCertificate(
        h=h,
        t0=t0,
        eta=eta,
        rate_bound=rate,
        stationary=g,
        projection=projection,
        audit=tuple(records),
    )


def find_certificate(
    model: Model,
    t0_grid: Iterable[float],
    audit_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> CertificateResult:
    """
    First certificate over a sweep of ``t₀`` values.

    Returns NoCertificate carrying the largest mass seen when every ``t₀``
    is inconclusive.
    """
    ev = evaluator or SemigroupEvaluator(model)
    best: Optional[NoCertificate] = None
    for t0 in t0_grid:
        if t0 <= 0:
            continue
        result = certify_uniform_convergence(model, t0, audit_grid, tol, ev)
        if isinstance(result, ConvergenceCertificate):
            return result
        if best is None or result.eta > best.eta:
            best = result
    if best is None:
        raise ValidationError("t0 grid contains no positive time")
    return NoCertificate(t0=best.t0, eta=best.eta, reason="no t0 on the grid has positive mass")


@dataclass(frozen=True)
class LimitIdentity:
    """Both sides of ``‖T − 𝟙⊗g‖ = 2·deficiency(T, g)``."""

    distance: float
    twice_deficiency: float

    @property
    def residual(self) -> float:
        return abs(self.distance - self.twice_deficiency)


def limit_deficiency_identity(op: Operator, g: Density) -> LimitIdentity:
    """
    Compare ``op_norm(T − 𝟙⊗g)`` with ``2·deficiency(T, g)``.

    For stochastic ``T`` and a density ``g`` of mass 1 the two agree: the
    positive and negative parts of ``T(e_j/μ_j) − g`` carry equal mass.
    """
    return LimitIdentity(
        distance=op_distance(op, rank_one(g)),
        twice_deficiency=2.0 * deficiency(op, g).deficiency,
    )


@dataclass(frozen=True)
class LimitBoundRow:
    time: float
    deficiency: float
    distance: float


@dataclass(frozen=True)
class LimitBoundReport:
    """Deficiency of the stationary density against ``‖T_t − P‖`` over a grid."""

    rows: Tuple[LimitBoundRow, ...]
    passed: bool


def limit_is_lower_bound(
    model: Model,
    grid: Iterable[float],
    tol: float = DEFAULT_TOL,
    evaluator: Optional[SemigroupEvaluator] = None,
) -> LimitBoundReport:
    """
    Check ``deficiency(T_t, g) <= ‖T_t − P‖`` on a grid.

    When ``T_t → P`` this makes ``g`` a uniform lower bound of mass 1.
    """
    ev = evaluator or SemigroupEvaluator(model)
    g = stationary_density(model).g
    projection = rank_one(g)
    rows = []
    for t in sorted(set(float(x) for x in grid)):
        op = ev.at(t)
        rows.append(LimitBoundRow(t, deficiency(op, g, t).deficiency, op_distance(op, projection)))
    passed = all(r.deficiency <= r.distance + tol for r in rows)
    return LimitBoundReport(rows=tuple(rows), passed=passed)


@dataclass(frozen=True)
class BootstrapRow:
    time: float
    mass: float
    invariance_residual: float


def bootstrap_profile(
    model: Model,
    t0: float,
    grid: Iterable[float],
    evaluator: Optional[SemigroupEvaluator] = None,
) -> Tuple[BootstrapRow, ...]:
    """
    Mass of ``maximal_lower_bound_at(T_t)`` and its residual ``‖T_{t₀}h − h‖``.

    For convergent models the mass climbs to 1 and the residual vanishes: the
    maximal lower bound becomes a fixed point of full mass. Diagnostic only.
    """
    ev = evaluator or SemigroupEvaluator(model)
    step = ev.at(t0)
    rows = []
    for t in sorted(set(float(x) for x in grid)):
        h = maximal_lower_bound_at(ev.at(t))
        rows.append(BootstrapRow(t, l1_norm(h), l1_norm(apply(step, h) - h)))
    return tuple(rows)


__all__ = [
    "DeficiencyReport",
    "RateBound",
    "AuditRecord",
    "ConvergenceCertificate",
    "NoCertificate",
    "CertificateResult",
    "deficiency",
    "maximal_lower_bound_at",
    "doeblin_mass",
    "certify_uniform_convergence",
    "find_certificate",
    "LimitIdentity",
    "limit_deficiency_identity",
    "LimitBoundRow",
    "LimitBoundReport",
    "limit_is_lower_bound",
    "BootstrapRow",
    "bootstrap_profile",
]

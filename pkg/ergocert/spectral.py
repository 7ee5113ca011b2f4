"""
Resolvents, stationary densities, spectral diagnostics and the dual-side
conditions of the mean-ergodic / pole / dual-irreducibility equivalences.

CTMC spectra are those of ``Q``. Grid models (DTMC, PDMP) are analysed through
their one-step operator ``T_Δ``: eigenvalue ``z`` maps to the rate
``ln|z|/Δ``, so the gap is ``−ln(max{|z| : z ≠ 1})/Δ``. Resolvents of grid
models use the surrogate generator ``(T_Δ − I)/Δ``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.integrate
import scipy.linalg

from .config import DEFAULT_TOL
from .errors import ConsistencyError, NotIrreducibleError, ValidationError
from .evolution import (
    CesaroEvaluator,
    SemigroupEvaluator,
    uniformized_exponential,
)
from .lattice import (
    Density,
    DualVector,
    KernelOperator,
    compose,
    dense,
    dual_apply,
    is_stochastic,
    op_distance,
    rank_one,
)
from .models import (
    CtmcModel,
    DtmcModel,
    Model,
    PdmpModel,
    generator_matrix,
    is_grid_model,
    is_irreducible,
    transition_graph,
)

logger = logging.getLogger(__name__)

EIGEN_ACCURACY = 1e-9
LAMBDA_SWEEP = (0.5, 1.0, 2.0)
# Strict positivity threshold for the quasi-interior test in the suite.
QUASI_INTERIOR_EPS = 1e-300
# Cesàro grid of the suite: SUITE_GRID_POINTS times up to max(64, SUITE_GRID_SCALE/gap).
SUITE_GRID_POINTS = 64
SUITE_GRID_SCALE = 8.0


@dataclass(frozen=True)
class SpectralReport:
    """
    Eigenvalue summary of a model.

    For CTMCs ``eigenvalues`` are those of ``Q`` and ``peripheral`` collects
    ``|Re ν| <= tol``. For grid models they are the eigenvalues of the one-step
    operator and ``peripheral`` collects ``|z| >= 1 − tol``.
    """

    eigenvalues: Tuple[complex, ...]
    spectral_gap: float
    zero_multiplicity: Tuple[int, int]
    peripheral: Tuple[complex, ...]
    one_step: bool


@dataclass(frozen=True)
class StationaryDensity:
    g: Density

    @property
    def projection(self) -> KernelOperator:
        """``P = 𝟙⊗g``."""
        return rank_one(self.g)


def _sorted(values: np.ndarray) -> Tuple[complex, ...]:
    order = np.lexsort((values.imag, -values.real))
    return tuple(complex(v) for v in values[order])


def spectral_report(model: Model, tol: float = EIGEN_ACCURACY) -> SpectralReport:
    """
    Eigenvalues, gap, multiplicity of the invariant eigenvalue and peripheral set.

    Raises:
        ConsistencyError: If no eigenvalue sits at the invariant value within
            the eigen-solver accuracy target
    """
    n = model.space.n
    if is_grid_model(model):
        matrix = generator_matrix(model) * model.time_step + np.eye(n)
        values = scipy.linalg.eigvals(matrix)
        target = 1.0
    else:
        matrix = generator_matrix(model)
        values = scipy.linalg.eigvals(matrix)
        target = 0.0

    scale = max(1.0, float(np.max(np.abs(matrix))))
    distance = np.abs(values - target)
    if float(np.min(distance)) > EIGEN_ACCURACY * scale * n:
        raise ConsistencyError(
            "invariant eigenvalue not found",
            {"closest": float(np.min(distance)), "target": target},
        )
    at_target = distance <= max(tol, EIGEN_ACCURACY) * scale * n
    algebraic = int(np.count_nonzero(at_target))
    kernel = scipy.linalg.null_space(matrix - target * np.eye(n), rcond=EIGEN_ACCURACY)
    geometric = int(kernel.shape[1])

    rest = values[~at_target]
    if is_grid_model(model):
        radius = float(np.max(np.abs(rest))) if rest.size else 0.0
        gap = math.inf if radius == 0.0 else -math.log(min(radius, 1.0)) / model.time_step
        peripheral = values[np.abs(values) >= 1.0 - tol]
    else:
        gap = float(-np.max(rest.real)) if rest.size else math.inf
        peripheral = values[np.abs(values.real) <= tol]
    gap = max(gap, 0.0)
    return SpectralReport(
        eigenvalues=_sorted(values),
        spectral_gap=gap,
        zero_multiplicity=(algebraic, geometric),
        peripheral=_sorted(peripheral),
        one_step=is_grid_model(model),
    )


@dataclass(frozen=True)
class ZeroPoleCheck:
    is_simple_pole: bool
    gap: float
    applicable: bool = True


def zero_pole_check(model: Model, tol: float = EIGEN_ACCURACY) -> ZeroPoleCheck:
    """
    Simplicity of the invariant eigenvalue and the spectral gap.

    In finite dimension 0 is always a pole once it is an eigenvalue, so only
    simplicity and the gap carry information. Pure-shift PDMPs have no rate
    generator; they are reported with ``applicable=False``.
    """
    report = spectral_report(model, tol)
    simple = report.zero_multiplicity[0] == 1
    applicable = not (isinstance(model, PdmpModel) and model.is_pure_shift)
    return ZeroPoleCheck(is_simple_pole=simple, gap=report.spectral_gap, applicable=applicable)


def resolvent(model: Model, lam: float) -> KernelOperator:
    """
    ``R(λ, A) = (λI − A)⁻¹`` for real ``λ > 0``.

    Raises:
        ValidationError: If ``λ <= 0``
    """
    if not lam > 0:
        raise ValidationError(f"resolvent parameter must be > 0, got {lam}")
    a = generator_matrix(model)
    n = model.space.n
    return KernelOperator(model.space, scipy.linalg.solve(lam * np.eye(n) - a, np.eye(n)))


def _gth(rows: np.ndarray) -> np.ndarray:
    """Grassmann–Taksar–Heyman elimination for ``x·A = 0`` with row sums zero."""
    a = np.array(rows, dtype=float)
    n = a.shape[0]
    for i in range(n - 1):
        scale = float(np.sum(a[i, i + 1 :]))
        if scale <= 0:
            raise NotIrreducibleError("transition structure has more than one closed class")
        a[i + 1 :, i] /= scale
        a[i + 1 :, i + 1 :] += np.outer(a[i + 1 :, i], a[i, i + 1 :])
    x = np.zeros(n)
    x[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        x[i] = x[i + 1 :] @ a[i + 1 :, i]
    return x / x.sum()


def stationary_density(model: Model) -> StationaryDensity:
    """
    The unique density ``g`` of mass 1 with ``T_t g = g``.

    Raises:
        NotIrreducibleError: If the model is reducible
    """
    if not is_irreducible(model):
        raise NotIrreducibleError(f"{model!r} is reducible; its stationary density is not unique")
    w = model.space.weights
    # Mass coordinates: m_i = μ_i f_i, generator diag(μ) A diag(μ)⁻¹ has zero column sums.
    mass_generator = (w[:, None] * generator_matrix(model)) / w[None, :]
    mass = _gth(mass_generator.T)
    g = np.maximum(mass, 0.0) / w
    g = g / float(w @ g)
    return StationaryDensity(Density(model.space, g))


def limit_projection(model: Model) -> KernelOperator:
    """The rank-one limit ``P = 𝟙⊗g``."""
    return stationary_density(model).projection


@dataclass(frozen=True)
class ProjectionReport:
    idempotence: float
    stochastic: bool
    rank: int
    commutation: float

    def passed(self, tol: float = 1e-9) -> bool:
        return (
            self.idempotence <= tol
            and self.stochastic
            and self.rank == 1
            and self.commutation <= tol
        )


def projection_properties(
    model: Model, grid: Iterable[float], tol: float = 1e-9
) -> ProjectionReport:
    """Residuals of ``P² = P``, rank one, stochasticity and ``PT_t = T_tP = P``."""
    p = limit_projection(model)
    ev = SemigroupEvaluator(model)
    commutation = 0.0
    for t in grid:
        op = ev.at(t)
        commutation = max(
            commutation, op_distance(compose(p, op), p), op_distance(compose(op, p), p)
        )
    return ProjectionReport(
        idempotence=op_distance(compose(p, p), p),
        stochastic=is_stochastic(p, tol),
        rank=int(np.linalg.matrix_rank(dense(p), tol=tol)),
        commutation=commutation,
    )


@dataclass(frozen=True)
class MeanErgodicReport:
    """
    ``‖C_t − P‖`` on a grid with the fitted ``c`` of ``c/t``.

    ``passed`` is the envelope test: ``t·‖C_t − P‖`` on the later half of the
    grid stays within 1.5 times its maximum on the earlier half.
    """

    times: Tuple[float, ...]
    distances: Tuple[float, ...]
    fitted_c: float
    monotone: bool
    passed: bool


def mean_ergodic_check(
    model: Model,
    grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    evaluator: Optional[CesaroEvaluator] = None,
) -> MeanErgodicReport:
    """
    Measure uniform mean ergodicity.

    Raises:
        NotIrreducibleError: If the limit ``P`` is not unique
        ValidationError: If the grid has no positive time
    """
    times = tuple(sorted(float(t) for t in set(grid) if t > 0))
    if not times:
        raise ValidationError("mean-ergodic grid needs positive times")
    p = limit_projection(model)
    ev = evaluator or CesaroEvaluator(model)
    distances = tuple(op_distance(ev.at(t), p) for t in times)
    t_arr, d_arr = np.array(times), np.array(distances)
    fitted_c = float(np.sum(d_arr / t_arr) / np.sum(1.0 / t_arr**2))
    monotone = bool(np.all(np.diff(d_arr) <= tol))
    passed = _envelope_ok(t_arr, d_arr, tol)
    return MeanErgodicReport(
        times=times, distances=distances, fitted_c=fitted_c, monotone=monotone, passed=passed
    )


def _envelope_ok(t: np.ndarray, d: np.ndarray, tol: float) -> bool:
    if d[-1] <= tol:
        return True
    scaled = t * d
    half = max(1, len(t) // 2)
    early = float(np.max(scaled[:half]))
    late = float(np.max(scaled[half:])) if len(t) > half else early
    return bool(late <= 1.5 * early + tol * float(t[-1]))


def dual_resolvent_quasi_interior(
    model: Model, f: DualVector, lam: float, eps: float
) -> bool:
    """
    ``R(λ, A)′f >= ε𝟙``.

    Raises:
        ValidationError: If ``f`` is not positive and non-zero, or ``λ``/``ε``
            are not positive
    """
    if np.any(f.values < 0) or not np.any(f.values):
        raise ValidationError("f must be positive and non-zero")
    if not eps > 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    image = dual_apply(resolvent(model, lam), f)
    return bool(np.min(image.values) >= eps)


def dual_irreducibility(model: Model) -> bool:
    """Strong connectivity of the reversed transition graph."""
    return bool(nx.is_strongly_connected(transition_graph(model).reverse(copy=True)))


def resolvent_identity_residual(model: Model, lam: float, nu: float) -> float:
    """``‖R(λ) − R(ν) − (ν − λ)R(λ)R(ν)‖``."""
    r_lam, r_nu = resolvent(model, lam), resolvent(model, nu)
    lhs = r_lam.entries - r_nu.entries
    rhs = (nu - lam) * (r_lam.entries @ r_nu.entries)
    return op_distance(KernelOperator(model.space, lhs), KernelOperator(model.space, rhs))


def _require_continuous(model: Model, what: str) -> CtmcModel:
    if not isinstance(model, CtmcModel):
        raise ValidationError(f"{what} needs a continuous-time rate model, got {model!r}")
    return model


@dataclass(frozen=True)
class LaplaceReport:
    residual: float
    tail_weight: float


def laplace_consistency(
    model: Model, lam: float, horizon: float = 40.0, steps: int = 4096
) -> LaplaceReport:
    """
    Compare ``λR(λ)`` with the Laplace integral ``λ∫₀ᴴ e^{−λs} T_s ds``.

    The tail beyond the horizon is ``e^{−λH} T_H λR(λ)`` exactly, so the
    residual measures quadrature error only (Simpson's rule on ``steps``
    substeps).
    """
    ctmc = _require_continuous(model, "Laplace consistency")
    if horizon <= 0 or steps < 2:
        raise ValidationError(f"need horizon > 0 and steps >= 2, got {horizon}, {steps}")
    n = model.space.n
    h = horizon / steps
    one = uniformized_exponential(ctmc.rates, h)
    samples = np.empty((steps + 1, n, n))
    samples[0] = np.eye(n)
    for k in range(1, steps + 1):
        samples[k] = one @ samples[k - 1]
    weights = np.exp(-lam * h * np.arange(steps + 1))
    integral = lam * scipy.integrate.simpson(samples * weights[:, None, None], dx=h, axis=0)
    scaled = lam * resolvent(model, lam).entries
    tail = math.exp(-lam * horizon) * (samples[-1] @ scaled)
    residual = op_distance(
        KernelOperator(model.space, scaled), KernelOperator(model.space, integral + tail)
    )
    return LaplaceReport(residual=residual, tail_weight=math.exp(-lam * horizon))


@dataclass(frozen=True)
class DominationReport:
    max_violation: float
    passed: bool


def domination_check(
    model: Model,
    lam: float = 1.0,
    times: Sequence[float] = (0.5, 1.0),
    tol: float = 1e-9,
) -> DominationReport:
    """Entrywise ``T_t R(λ) <= e^{λt} R(λ)``."""
    _require_continuous(model, "domination check")
    r = resolvent(model, lam).entries
    ev = SemigroupEvaluator(model)
    worst = -math.inf
    for t in times:
        diff = dense(ev.at(t)) @ r - math.exp(lam * t) * r
        worst = max(worst, float(np.max(diff)))
    return DominationReport(max_violation=worst, passed=worst <= tol)


CONDITIONS = ("i", "ii", "iii", "iv", "v", "vi")


@dataclass(frozen=True)
class CorollarySuite:
    """
    The six equivalent conditions evaluated on one model.

    ``conditions`` maps ``"i"``..``"vi"`` to booleans. Agreement is only
    required when ``hypothesis_met`` holds.
    """

    hypothesis_met: bool
    reason: str
    conditions: Dict[str, bool]
    evidence: Dict[str, float] = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return len(set(self.conditions.values())) == 1


def _operator_convergence(
    model: Model, start: float, conv_tol: float, horizon: float
) -> Tuple[bool, float]:
    ev = SemigroupEvaluator(model)
    t = start
    op = ev.at(t)
    try:
        p = limit_projection(model)
    except NotIrreducibleError:
        p = None
    while t <= horizon:
        doubled = compose(op, op)
        if p is not None:
            distance = op_distance(op, p)
        else:
            distance = max(op_distance(doubled, op), op_distance(compose(op, ev.at(start)), op))
        if distance <= conv_tol:
            return True, t
        op, t = doubled, 2.0 * t
    return False, t


def _suite_grid(model: Model) -> Tuple[float, ...]:
    """Evenly spaced Cesàro times long enough for the slowest mode to settle."""
    gap = spectral_report(model).spectral_gap
    horizon = float(SUITE_GRID_POINTS)
    if 0.0 < gap < math.inf:
        horizon = min(max(horizon, SUITE_GRID_SCALE / gap), 1e6)
    step = horizon / SUITE_GRID_POINTS
    if is_grid_model(model):
        unit = float(model.time_step or 1.0)
        step = unit * math.ceil(step / unit)
    return tuple(step * k for k in range(1, SUITE_GRID_POINTS + 1))


def _cesaro_cauchy(model: Model, times: Sequence[float], tol: float) -> bool:
    ev = CesaroEvaluator(model)
    t_arr = np.array(times)
    d_arr = np.array([op_distance(ev.at(2.0 * t), ev.at(t)) for t in times])
    return _envelope_ok(t_arr, d_arr, tol)


def corollary_suite(
    model: Model,
    t0: float = 1.0,
    lambdas: Sequence[float] = LAMBDA_SWEEP,
    conv_tol: float = 1e-6,
    horizon: float = 1e4,
    tol: float = DEFAULT_TOL,
) -> CorollarySuite:
    """
    Evaluate conditions (i)–(vi) and require agreement under the hypothesis.

    The hypothesis is an irreducible continuous-time model whose ``T_{t₀}``
    has a non-zero kernel part.

    Raises:
        ConsistencyError: If the hypothesis holds and the conditions disagree
    """
    irreducible = is_irreducible(model)
    kernel_zero = SemigroupEvaluator(model).at(t0).kernel.is_zero
    if isinstance(model, DtmcModel):
        hypothesis, reason = False, "discrete-time"
    elif not irreducible:
        hypothesis, reason = False, "reducible"
    elif kernel_zero:
        hypothesis, reason = False, "kernel part zero"
    else:
        hypothesis, reason = True, "met"

    grid = _suite_grid(model)
    evidence: Dict[str, float] = {}

    converged, t_conv = _operator_convergence(model, t0, conv_tol, horizon)
    evidence["i_time"] = t_conv

    if irreducible:
        mean = mean_ergodic_check(model, grid, tol)
        mean_ok = mean.passed
        evidence["ii_fitted_c"] = mean.fitted_c
    else:
        mean_ok = _cesaro_cauchy(model, grid, tol)

    pole = zero_pole_check(model)
    pole_ok = pole.is_simple_pole and pole.gap > 0
    evidence["iii_gap"] = pole.gap

    dual_ok = dual_irreducibility(model)

    n = model.space.n
    per_lambda = []
    for lam in lambdas:
        ok = all(
            dual_resolvent_quasi_interior(model, DualVector(model.space, np.eye(n)[i]), lam, QUASI_INTERIOR_EPS)
            for i in range(n)
        )
        per_lambda.append(ok)
    some_lambda, all_lambda = any(per_lambda), all(per_lambda)

    suite = CorollarySuite(
        hypothesis_met=hypothesis,
        reason=reason,
        conditions={
            name: bool(value)
            for name, value in zip(
                CONDITIONS, (converged, mean_ok, pole_ok, dual_ok, some_lambda, all_lambda)
            )
        },
        evidence=evidence,
    )
    if hypothesis and not suite.agree:
        raise ConsistencyError(
            f"equivalent conditions disagree on {model!r}",
            {**suite.conditions, **evidence},
        )
    logger.debug("suite for %r: %s (%s)", model, suite.conditions, reason)
    return suite


__all__ = [
    "SpectralReport",
    "StationaryDensity",
    "ZeroPoleCheck",
    "ProjectionReport",
    "MeanErgodicReport",
    "LaplaceReport",
    "DominationReport",
    "CorollarySuite",
    "CONDITIONS",
    "LAMBDA_SWEEP",
    "spectral_report",
    "zero_pole_check",
    "resolvent",
    "stationary_density",
    "limit_projection",
    "projection_properties",
    "mean_ergodic_check",
    "dual_resolvent_quasi_interior",
    "dual_irreducibility",
    "resolvent_identity_residual",
    "laplace_consistency",
    "domination_check",
    "corollary_suite",
]

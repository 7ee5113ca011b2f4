"""
Semigroup and Cesàro-mean evaluation.

- CTMC: uniformization ``e^{tQ} = e^{−qt} Σ_k (qt)^k/k! Pᵏ`` with
  ``q = 1.1·max_j |q_jj|`` and ``P = I + Q/q``. Every term is positive, so the
  result stays stochastic up to the truncated Poisson tail.
- PDMP: the exact structured form ``e^{−λt} S_t + (1 − e^{−λt}) 𝟙⊗ν``.
- DTMC: integer powers by repeated squaring.

Cesàro means of CTMCs come from the augmented block exponential
``exp(t·[[Q, I], [0, 0]])``, whose upper-right block is ``∫₀ᵗ e^{sQ} ds``.
"""

import logging
import math
import threading
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special
from typing_extensions import Literal, TypeAlias

from .config import get_settings
from .errors import ValidationError
from .lattice import (
    KernelOperator,
    StructuredOperator,
    compose,
    dense,
    from_dense,
    identity,
    power,
    rank_one,
)
from .models import (
    CtmcModel,
    DtmcModel,
    Model,
    PdmpModel,
    grid_steps,
    is_grid_model,
)

logger = logging.getLogger(__name__)

CesaroMethod: TypeAlias = Literal["closed-form", "grid-average"]

UNIFORMIZATION_SAFETY = 1.1


def _check_time(t: float) -> None:
    if not math.isfinite(t) or t < 0:
        raise ValidationError(f"time must be a finite value >= 0, got {t}")


def _poisson_weights(rate: float, truncation: float) -> np.ndarray:
    """Poisson(rate) probabilities up to the first index whose tail is < truncation."""
    # Bound for the number of terms; the loop below stops far earlier.
    k_max = int(rate + 50.0 * math.sqrt(rate + 1.0) + 100)
    ks = np.arange(k_max + 1)
    log_pmf = ks * math.log(rate) - rate - scipy.special.gammaln(ks + 1)
    pmf = np.exp(log_pmf)
    tail = 1.0 - np.cumsum(pmf)
    stop = int(np.argmax(tail < truncation)) if np.any(tail < truncation) else k_max
    return pmf[: stop + 1]


def uniformized_exponential(
    rates: np.ndarray, t: float, truncation: Optional[float] = None
) -> np.ndarray:
    """
    ``e^{tQ}`` of a rate matrix by uniformization.

    Args:
        rates: Rate matrix Q in density coordinates
        t: Time (>= 0)
        truncation: Remaining Poisson mass at which the series stops
            (default: ERGOCERT_TRUNCATION)
    """
    _check_time(t)
    n = rates.shape[0]
    q = UNIFORMIZATION_SAFETY * float(np.max(np.abs(np.diag(rates)), initial=0.0))
    if q == 0.0 or t == 0.0:
        return np.eye(n)
    eps = get_settings().truncation if truncation is None else truncation
    weights = _poisson_weights(q * t, eps)
    step = np.eye(n) + rates / q
    term = np.eye(n)
    out = weights[0] * term
    for w in weights[1:]:
        term = step @ term
        out += w * term
    logger.debug("uniformization qt=%.4g used %d terms", q * t, weights.size)
    return out


def semigroup_at(
    model: Model, t: float, truncation: Optional[float] = None
) -> StructuredOperator:
    """
    Evaluate ``T_t``.

    Args:
        model: Generating model
        t: Time (>= 0; on the grid ℕ₀ for DTMC/PDMP models)
        truncation: Uniformization truncation mass for CTMCs

    Raises:
        ValidationError: Negative or off-grid time
    """
    _check_time(t)
    if isinstance(model, PdmpModel):
        return model.transition(grid_steps(model, t))
    if isinstance(model, DtmcModel):
        return power(model.step, grid_steps(model, t))
    return from_dense(model.space, uniformized_exponential(model.rates, t, truncation))


def _pdmp_cesaro(model: PdmpModel, steps: int) -> StructuredOperator:
    n, lam = model.n, model.jump_rate
    weights = np.zeros(n)
    counts = np.array([(steps - r + n - 1) // n if r < steps else 0 for r in range(n)])
    if lam == 0.0:
        weights = counts / steps
        transport = 1.0
    else:
        cell = -math.expm1(-lam) / (lam * steps)
        cycle = -math.expm1(-lam * n)
        for r in range(n):
            if counts[r]:
                weights[r] = cell * math.exp(-lam * r) * (
                    -math.expm1(-lam * n * counts[r])
                ) / cycle
        transport = -math.expm1(-lam * steps) / (lam * steps)
    shift = np.zeros((n, n))
    for r in range(n):
        if weights[r]:
            perm = model.shift_perm(r)
            shift[list(perm), list(range(n))] += weights[r]
    matrix = shift
    if not model.is_pure_shift:
        matrix = matrix + (1.0 - transport) * rank_one(model.jump_target).entries
    return from_dense(model.space, matrix)


def block_cesaro(rates: np.ndarray, t: float) -> np.ndarray:
    """``(1/t)∫₀ᵗ e^{sQ} ds`` from the exponential of ``t·[[Q, I], [0, 0]]``."""
    n = rates.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = rates
    block[:n, n:] = np.eye(n)
    return np.asarray(scipy.linalg.expm(t * block)[:n, n:] / t)


def cesaro_mean(
    model: Model, t: float, method: CesaroMethod = "closed-form"
) -> StructuredOperator:
    """
    Cesàro mean ``C_t = (1/t)∫₀ᵗ T_s ds``.

    Grid models use the piecewise-constant reading of the integral:
    ``C_m = (1/m) Σ_{k<m} T_k`` for DTMCs, and for PDMPs the jump survival
    ``e^{−λs}`` is integrated exactly on each cell ``[k, k+1)`` with the shift
    held at ``S^k``. The result is returned entirely in the kernel part.

    Args:
        model: Generating model
        t: Averaging horizon (> 0, on the grid for DTMC/PDMP)
        method: ``closed-form`` (block exponential / geometric sums) or
            ``grid-average`` (trapezoid quadrature for CTMCs, explicit power
            sum for grid models)

    Raises:
        ValidationError: If ``t <= 0`` or off the model grid
    """
    _check_time(t)
    if t == 0:
        raise ValidationError("Cesàro means need t > 0")
    if is_grid_model(model):
        steps = grid_steps(model, t)
        if isinstance(model, PdmpModel) and method == "closed-form":
            return _pdmp_cesaro(model, steps)
        return _power_average(model, steps)
    assert isinstance(model, CtmcModel)
    if method == "grid-average":
        return trapezoid_cesaro(model, t)
    return from_dense(model.space, block_cesaro(model.rates, t))


def _power_average(model: Model, steps: int) -> StructuredOperator:
    one = semigroup_at(model, 1.0)
    current = identity(model.space)
    total = np.zeros((model.space.n, model.space.n))
    for _ in range(steps):
        total += dense(current)
        current = compose(current, one)
    return from_dense(model.space, total / steps)


def split(op: StructuredOperator) -> Tuple[KernelOperator, StructuredOperator]:
    """
    Split ``T = K + R`` into its kernel part ``K`` and singular part ``R``.

    Operators without a singular part give ``K = T`` and ``R = 0``.
    """
    remainder = StructuredOperator(KernelOperator.zeros(op.space), op.singular)
    return op.kernel, remainder


def decomposition_at(
    model: Model, t0: float, t: float
) -> Tuple[StructuredOperator, StructuredOperator]:
    """
    ``(K_t, R_t) = (K·T_{t−t₀}, R·T_{t−t₀})`` where ``(K, R) = split(T_{t₀})``.

    With this definition ``K_t T_s = K_{t+s}`` and ``R_t T_s = R_{t+s}`` hold
    for every ``s`` and ``K_t + R_t = T_t``.
    """
    if t < t0:
        raise ValidationError(f"decomposition time {t} precedes t0={t0}")
    kernel, remainder = split(semigroup_at(model, t0))
    rest = semigroup_at(model, t - t0)
    return compose(kernel, rest), compose(remainder, rest)


def eigendecomposition_oracle(rates: np.ndarray, t: float) -> np.ndarray:
    """``e^{tQ} = V e^{tΛ} V⁻¹``; an independent check for diagonalizable Q."""
    values, vectors = scipy.linalg.eig(rates)
    scaled = vectors * np.exp(t * values)
    return np.real(scipy.linalg.solve(vectors.T, scaled.T).T)


def trapezoid_cesaro(model: CtmcModel, t: float, steps: int = 1024) -> StructuredOperator:
    """Trapezoid quadrature of ``(1/t)∫₀ᵗ e^{sQ} ds`` on ``steps`` equal substeps."""
    if t <= 0 or steps < 1:
        raise ValidationError(f"need t > 0 and steps >= 1, got t={t}, steps={steps}")
    h = t / steps
    one = uniformized_exponential(model.rates, h)
    samples = np.empty((steps + 1, model.space.n, model.space.n))
    samples[0] = np.eye(model.space.n)
    for k in range(1, steps + 1):
        samples[k] = one @ samples[k - 1]
    integral = scipy.integrate.trapezoid(samples, dx=h, axis=0)
    return from_dense(model.space, integral / t)


class _TimeCache:
    """Time-keyed cache guarded by an RLock; one writer at a time."""

    def __init__(self, compute: Callable[[float], StructuredOperator], max_size: int) -> None:
        self._compute = compute
        self._max_size = max_size
        self._entries: Dict[float, StructuredOperator] = {}
        self._lock = threading.RLock()
        self._hits = 0
        self._misses = 0

    def get(self, t: float) -> StructuredOperator:
        key = float(t)
        with self._lock:
            cached = self._entries.get(key)
            if cached is not None:
                self._hits += 1
                return cached
        value = self._compute(key)
        with self._lock:
            self._misses += 1
            if len(self._entries) >= self._max_size:
                self._entries.pop(next(iter(self._entries)))
            return self._entries.setdefault(key, value)

    def peek(self, t: float) -> Optional[StructuredOperator]:
        with self._lock:
            return self._entries.get(float(t))

    def nearest_below(self, t: float) -> Optional[Tuple[float, StructuredOperator]]:
        """Largest cached time strictly below ``t``, with its value."""
        with self._lock:
            below = [s for s in self._entries if s < t]
            if not below:
                return None
            s = max(below)
            return s, self._entries[s]

    def stats(self) -> Dict[str, int]:
        with self._lock:
            return {"hits": self._hits, "misses": self._misses, "size": len(self._entries)}

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._hits = self._misses = 0


class SemigroupEvaluator:
    """
    Cached ``t ↦ T_t`` for one model.

    Entries are keyed by the exact time value; there is no interpolation.
    For CTMCs a new time ``t`` is built as ``T_{t−s}∘T_s`` from the largest
    cached ``s ≥ t/2``, so ascending uniform grids cost one short
    uniformization and one product per point. Safe to share between threads.
    """

    def __init__(
        self, model: Model, truncation: Optional[float] = None, max_size: int = 4096
    ) -> None:
        self.model = model
        self.truncation = get_settings().truncation if truncation is None else truncation
        self._cache = _TimeCache(self._compute, max_size)

    def _compute(self, t: float) -> StructuredOperator:
        if isinstance(self.model, CtmcModel) and t > 0:
            base = self._cache.nearest_below(t)
            if base is not None and base[0] >= t / 2:
                s, t_s = base
                step = t - s
                t_step = self._cache.peek(step)
                if t_step is None:
                    t_step = semigroup_at(self.model, step, self.truncation)
                return compose(t_step, t_s)
        return semigroup_at(self.model, t, self.truncation)

    def at(self, t: float) -> StructuredOperator:
        return self._cache.get(t)

    def decomposition(
        self, t0: float, t: float
    ) -> Tuple[StructuredOperator, StructuredOperator]:
        """Cached variant of :func:`decomposition_at`."""
        if t < t0:
            raise ValidationError(f"decomposition time {t} precedes t0={t0}")
        kernel, remainder = split(self.at(t0))
        rest = self.at(t - t0)
        return compose(kernel, rest), compose(remainder, rest)

    def cache_stats(self) -> Dict[str, int]:
        return self._cache.stats()

    def cache_clear(self) -> None:
        self._cache.clear()

    def __repr__(self) -> str:
        return f"SemigroupEvaluator({self.model!r}, truncation={self.truncation:g})"


class CesaroEvaluator:
    """Cached ``t ↦ C_t`` for one model."""

    def __init__(
        self, model: Model, method: CesaroMethod = "closed-form", max_size: int = 4096
    ) -> None:
        if method not in ("closed-form", "grid-average"):
            raise ValidationError(f"unknown Cesàro method {method!r}")
        self.model = model
        self.method: CesaroMethod = method
        self._cache = _TimeCache(lambda t: cesaro_mean(self.model, t, self.method), max_size)

    def at(self, t: float) -> StructuredOperator:
        return self._cache.get(t)

    def cache_stats(self) -> Dict[str, int]:
        return self._cache.stats()

    def cache_clear(self) -> None:
        self._cache.clear()

    def __repr__(self) -> str:
        return f"CesaroEvaluator({self.model!r}, method={self.method!r})"


__all__ = [
    "CesaroMethod",
    "SemigroupEvaluator",
    "CesaroEvaluator",
    "uniformized_exponential",
    "semigroup_at",
    "cesaro_mean",
    "block_cesaro",
    "split",
    "decomposition_at",
    "eigendecomposition_oracle",
    "trapezoid_cesaro",
]

"""
Vector and operator lattice arithmetic on a discretized L¹(Ω, μ).

Coordinates are densities with respect to the cell masses μ, so every norm and
pairing carries μ-weights:

    ‖f‖₁ = Σ_i μ_i |f_i|          ⟨φ, f⟩ = Σ_i μ_i φ_i f_i

An operator matrix ``t`` acts by ``(Tf)_i = Σ_j t_ij f_j``; it is stochastic
when it is positive and ``Σ_i μ_i t_ij = μ_j`` for every column ``j``.

A StructuredOperator splits a positive operator into a weighted cell
permutation (the singular part) plus a kernel matrix. Products keep that
split: singular parts compose, every cross term falls into the kernel part,
because kernel operators form a band that absorbs composition.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from typing_extensions import TypeAlias

from .config import DEFAULT_TOL
from .errors import ValidationError

ArrayLike: TypeAlias = Union[Sequence[float], np.ndarray]


def _frozen(values: ArrayLike, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Finite cell decomposition of Ω with strictly positive cell masses μ."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = _frozen(self.weights, 1, "weights")
        if weights.size < 1:
            raise ValidationError("state space needs at least one cell")
        if np.any(weights <= 0):
            raise ValidationError("cell masses must be strictly positive")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, n: int, mass: float = 1.0) -> "StateSpace":
        """Space of ``n`` cells of equal mass."""
        if n < 1:
            raise ValidationError(f"cell count must be >= 1, got {n}")
        return cls(np.full(n, float(mass)))

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateSpace):
            return NotImplemented
        return self is other or bool(np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(tuple(self.weights.tolist()))

    def __repr__(self) -> str:
        return f"StateSpace(n={self.n}, weights={self.weights.tolist()})"


@dataclass(frozen=True, eq=False)
class Density:
    """Element of L¹(Ω, μ): values are densities per unit cell mass."""

    space: StateSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen(self.values, 1, "density values")
        if values.size != self.space.n:
            raise ValidationError(
                f"density has {values.size} values for a space of {self.space.n} cells"
            )
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        """Signed total mass ⟨𝟙, f⟩."""
        return float(np.dot(self.space.weights, self.values))

    def is_positive(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.values >= -tol))

    def scaled(self, factor: float) -> "Density":
        return Density(self.space, factor * self.values)

    def __sub__(self, other: "Density") -> "Density":
        _check_same_space(self.space, other.space)
        return Density(self.space, self.values - other.values)

    def __add__(self, other: "Density") -> "Density":
        _check_same_space(self.space, other.space)
        return Density(self.space, self.values + other.values)

    def __repr__(self) -> str:
        return f"Density({self.values.tolist()})"


@dataclass(frozen=True, eq=False)
class DualVector:
    """Element of L∞(Ω, μ), paired with densities through ⟨φ, f⟩."""

    space: StateSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen(self.values, 1, "dual values")
        if values.size != self.space.n:
            raise ValidationError(
                f"dual vector has {values.size} values for a space of {self.space.n} cells"
            )
        object.__setattr__(self, "values", values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self) -> str:
        return f"DualVector({self.values.tolist()})"


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Integral operator given by its matrix in density coordinates."""

    space: StateSpace
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _frozen(self.entries, 2, "kernel entries")
        n = self.space.n
        if entries.shape != (n, n):
            raise ValidationError(
                f"kernel must be {n}x{n} for this space, got {entries.shape}"
            )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, space: StateSpace) -> "KernelOperator":
        return cls(space, np.zeros((space.n, space.n)))

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.entries >= 0.0))

    @property
    def is_zero(self) -> bool:
        return not bool(np.any(self.entries))

    def column_masses(self) -> np.ndarray:
        """Mass ``Σ_i μ_i t_ij`` carried by each column."""
        return np.asarray(self.space.weights @ self.entries)

    def __repr__(self) -> str:
        return f"KernelOperator(n={self.space.n})"


@dataclass(frozen=True)
class SingularPart:
    """
    Weighted cell permutation ``w·S_σ`` with ``(S_σ f)_{σ(j)} = f_j``.

    ``perm[j]`` is σ(j).
    """

    weight: float
    perm: Tuple[int, ...]

    def matrix(self, n: int) -> np.ndarray:
        out = np.zeros((n, n))
        out[list(self.perm), list(range(n))] = self.weight
        return out


@dataclass(frozen=True, eq=False)
class StructuredOperator:
    """Positive operator ``w·S_σ + kernel``; ``singular`` is None when absent."""

    kernel: KernelOperator
    singular: Optional[SingularPart] = None

    def __post_init__(self) -> None:
        sing = self.singular
        if sing is None:
            return
        n = self.space.n
        if sorted(sing.perm) != list(range(n)):
            raise ValidationError(f"singular map is not a permutation of {n} cells")
        if sing.weight < 0:
            raise ValidationError(f"singular weight must be >= 0, got {sing.weight}")
        w = self.space.weights
        if not np.array_equal(w[list(sing.perm)], w):
            raise ValidationError("singular map must preserve cell masses")
        if sing.weight == 0.0:
            object.__setattr__(self, "singular", None)

    @property
    def space(self) -> StateSpace:
        return self.kernel.space

    @property
    def singular_weight(self) -> float:
        return 0.0 if self.singular is None else float(self.singular.weight)

    def __repr__(self) -> str:
        return (
            f"StructuredOperator(n={self.space.n}, singular_weight={self.singular_weight})"
        )


Operator: TypeAlias = Union[KernelOperator, StructuredOperator]


def _check_same_space(a: StateSpace, b: StateSpace) -> None:
    if a != b:
        raise ValidationError(f"state space mismatch: {a!r} vs {b!r}")


def _permute_rows(matrix: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    out = np.empty_like(matrix)
    out[list(perm)] = matrix
    return out


def as_structured(op: Operator) -> StructuredOperator:
    """View a KernelOperator as a StructuredOperator without singular part."""
    if isinstance(op, StructuredOperator):
        return op
    return StructuredOperator(op)


def dense(op: Operator) -> np.ndarray:
    """Full matrix of an operator in density coordinates."""
    if isinstance(op, KernelOperator):
        return np.array(op.entries)
    out = np.array(op.kernel.entries)
    if op.singular is not None:
        out += op.singular.matrix(op.space.n)
    return out


def from_dense(space: StateSpace, matrix: np.ndarray) -> StructuredOperator:
    """Wrap a full matrix as a StructuredOperator carried entirely by its kernel."""
    return StructuredOperator(KernelOperator(space, matrix))


def identity(space: StateSpace, singular: bool = False) -> StructuredOperator:
    """
    Identity operator.

    Args:
        space: State space
        singular: Represent the identity as the trivial permutation (transport
            models) instead of as a kernel matrix (jump models)
    """
    if singular:
        return StructuredOperator(
            KernelOperator.zeros(space), SingularPart(1.0, tuple(range(space.n)))
        )
    return StructuredOperator(KernelOperator(space, np.eye(space.n)))


def ones(space: StateSpace) -> DualVector:
    """The constant function 𝟙."""
    return DualVector(space, np.ones(space.n))


def indicator(space: StateSpace, j: int) -> Density:
    """Normalized extreme point ``e_j/μ_j`` of the positive unit sphere."""
    values = np.zeros(space.n)
    values[j] = 1.0 / space.weights[j]
    return Density(space, values)


def rank_one(g: Density) -> KernelOperator:
    """The operator ``𝟙⊗g: f ↦ ⟨𝟙, f⟩g``; entries ``g_i μ_j``."""
    return KernelOperator(g.space, np.outer(g.values, g.space.weights))


def l1_norm(f: Density) -> float:
    """‖f‖₁ = Σ_i μ_i |f_i|."""
    return float(np.dot(f.space.weights, np.abs(f.values)))


def pos_part(f: Density) -> Density:
    return Density(f.space, np.maximum(f.values, 0.0))


def neg_part(f: Density) -> Density:
    return Density(f.space, np.maximum(-f.values, 0.0))


def density_join(a: Density, b: Density) -> Density:
    """Pointwise maximum ``a ∨ b``."""
    _check_same_space(a.space, b.space)
    return Density(a.space, np.maximum(a.values, b.values))


def pairing(phi: DualVector, f: Density) -> float:
    """⟨φ, f⟩ = Σ_i μ_i φ_i f_i."""
    _check_same_space(phi.space, f.space)
    return float(np.sum(f.space.weights * phi.values * f.values))


def apply(op: Operator, f: Density) -> Density:
    """Apply an operator to a density."""
    _check_same_space(op.space, f.space)
    if isinstance(op, KernelOperator):
        return Density(f.space, op.entries @ f.values)
    out = op.kernel.entries @ f.values
    if op.singular is not None:
        out[list(op.singular.perm)] += op.singular.weight * f.values
    return Density(f.space, out)


def compose(a: Operator, b: Operator) -> StructuredOperator:
    """
    Structured product ``a∘b``.

    The singular part of the product is ``w_a w_b S_{σ_a∘σ_b}``; every other
    term of the expansion is collected in the kernel part.
    """
    sa, sb = as_structured(a), as_structured(b)
    _check_same_space(sa.space, sb.space)
    kernel = sa.kernel.entries @ dense(sb)
    singular: Optional[SingularPart] = None
    if sa.singular is not None:
        kernel = kernel + sa.singular.weight * _permute_rows(
            sb.kernel.entries, sa.singular.perm
        )
        if sb.singular is not None:
            perm = tuple(sa.singular.perm[k] for k in sb.singular.perm)
            singular = SingularPart(sa.singular.weight * sb.singular.weight, perm)
    return StructuredOperator(KernelOperator(sa.space, kernel), singular)


def power(op: Operator, k: int) -> StructuredOperator:
    """``op^k`` by repeated squaring; ``k = 0`` gives the identity."""
    if k < 0:
        raise ValidationError(f"power must be >= 0, got {k}")
    base = as_structured(op)
    result = identity(base.space, singular=base.singular is not None)
    while k:
        if k & 1:
            result = compose(result, base)
        k >>= 1
        if k:
            base = compose(base, base)
    return result


def _column_norms(space: StateSpace, matrix: np.ndarray) -> np.ndarray:
    return np.asarray(space.weights @ np.abs(matrix)) / space.weights


def op_norm(op: Operator) -> float:
    """
    Operator norm on L¹_μ: ``max_j Σ_i μ_i |t_ij| / μ_j``.

    Exact, since the normalized cell indicators are the extreme points of the
    unit ball.
    """
    return float(np.max(_column_norms(op.space, dense(op))))


def op_distance(a: Operator, b: Operator) -> float:
    """``op_norm(a − b)`` for operators with arbitrary singular parts."""
    _check_same_space(a.space, b.space)
    return float(np.max(_column_norms(a.space, dense(a) - dense(b))))


def op_meet(t: KernelOperator, s: KernelOperator) -> KernelOperator:
    """
    Lattice infimum of two positive kernel operators (entrywise minimum).

    Raises:
        ValidationError: If an input has a negative entry or the spaces differ
    """
    _check_same_space(t.space, s.space)
    if not (t.is_positive and s.is_positive):
        raise ValidationError("op_meet needs positive operators")
    return KernelOperator(t.space, np.minimum(t.entries, s.entries))


def structured_meet(t: StructuredOperator, s: StructuredOperator) -> StructuredOperator:
    """
    Meet respecting the singular/kernel split.

    Kernel parts meet entrywise. Singular parts meet only when they share the
    same permutation; a singular part never meets a kernel part.
    """
    kernel = op_meet(t.kernel, s.kernel)
    singular: Optional[SingularPart] = None
    if t.singular is not None and s.singular is not None:
        if t.singular.perm == s.singular.perm:
            singular = SingularPart(
                min(t.singular.weight, s.singular.weight), t.singular.perm
            )
    return StructuredOperator(kernel, singular)


def is_stochastic(op: Operator, tol: float = DEFAULT_TOL) -> bool:
    """
    True iff all entries are ``>= -tol`` and every column mass is within
    ``tol·μ_j`` of ``μ_j``.
    """
    if tol < 0:
        raise ValidationError(f"tol must be >= 0, got {tol}")
    matrix = dense(op)
    if np.any(matrix < -tol):
        return False
    weights = op.space.weights
    masses = weights @ matrix
    return bool(np.all(np.abs(masses - weights) <= tol * weights))


def dual_apply(op: Operator, phi: DualVector) -> DualVector:
    """
    Adjoint action ``T′φ`` under the μ-weighted pairing:
    ``(T′φ)_j = Σ_i μ_i t_ij φ_i / μ_j`` so that ``⟨T′φ, f⟩ = ⟨φ, Tf⟩``.
    """
    _check_same_space(op.space, phi.space)
    w = op.space.weights
    return DualVector(phi.space, ((w * phi.values) @ dense(op)) / w)


__all__ = [
    "StateSpace",
    "Density",
    "DualVector",
    "KernelOperator",
    "SingularPart",
    "StructuredOperator",
    "Operator",
    "as_structured",
    "dense",
    "from_dense",
    "identity",
    "ones",
    "indicator",
    "rank_one",
    "l1_norm",
    "pos_part",
    "neg_part",
    "density_join",
    "pairing",
    "apply",
    "compose",
    "power",
    "op_norm",
    "op_distance",
    "op_meet",
    "structured_meet",
    "is_stochastic",
    "dual_apply",
]

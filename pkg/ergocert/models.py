"""
Semigroup-generating models: rate matrices, stochastic step matrices and
transport-plus-jump models on a circle of unit cells.

All models work in density coordinates (see ``ergocert.lattice``). Grid
models (DTMC and PDMP) have time step Δ = 1 and are only evaluated on ℕ₀.
"""

import logging
import math
from dataclasses import dataclass
from typing import ClassVar, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.linalg
from typing_extensions import Literal, TypeAlias

from .config import DEFAULT_TOL
from .errors import ValidationError
from .lattice import (
    ArrayLike,
    Density,
    KernelOperator,
    SingularPart,
    StateSpace,
    StructuredOperator,
    dense,
    is_stochastic,
    rank_one,
)

logger = logging.getLogger(__name__)

ModelKind: TypeAlias = Literal["ctmc", "dtmc", "pdmp"]

GRID_TOL = 1e-12
CELL_WIDTH = 1.0


@dataclass(frozen=True, eq=False)
class CtmcModel:
    """Continuous-time chain with rate matrix ``Q`` in density coordinates."""

    space: StateSpace
    rates: np.ndarray

    kind: ClassVar[str] = "ctmc"
    time_step: ClassVar[Optional[float]] = None

    def __repr__(self) -> str:
        return f"CtmcModel(n={self.space.n})"


@dataclass(frozen=True, eq=False)
class AtomModel(CtmcModel):
    """CTMC whose state space carries a designated atom cell."""

    atom: int = 0

    @property
    def atom_mass(self) -> float:
        return float(self.space.weights[self.atom])

    @property
    def return_rate(self) -> float:
        """Total rate of flow into the atom from the other cells."""
        mask = np.arange(self.space.n) != self.atom
        return float(self.rates[self.atom, mask].sum())

    def __repr__(self) -> str:
        return f"AtomModel(n={self.space.n}, atom={self.atom})"


@dataclass(frozen=True, eq=False)
class DtmcModel:
    """Discrete-time semigroup ``(Tⁿ)`` generated by a stochastic step."""

    space: StateSpace
    step: KernelOperator

    kind: ClassVar[str] = "dtmc"
    time_step: ClassVar[Optional[float]] = CELL_WIDTH

    def __repr__(self) -> str:
        return f"DtmcModel(n={self.space.n})"


@dataclass(frozen=True, eq=False)
class PdmpModel:
    """
    Rotation on a circle of ``n`` unit cells with jumps of rate λ to ν.

    The flow moves every cell one position per unit time, ``σ(j) = j+1 mod n``.
    Because ν is shift invariant the semigroup has the exact form
    ``T_t = e^{−λt} S_t + (1 − e^{−λt}) 𝟙⊗ν``.
    """

    space: StateSpace
    jump_rate: float
    jump_target: Density

    kind: ClassVar[str] = "pdmp"
    time_step: ClassVar[Optional[float]] = CELL_WIDTH

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def is_pure_shift(self) -> bool:
        return self.jump_rate == 0.0

    def shift_perm(self, steps: int) -> Tuple[int, ...]:
        n = self.space.n
        return tuple((j + steps) % n for j in range(n))

    def transition(self, steps: int) -> StructuredOperator:
        """Exact ``T_t`` at ``t = steps·Δ``."""
        survive = math.exp(-self.jump_rate * steps * CELL_WIDTH)
        if self.is_pure_shift:
            kernel = KernelOperator.zeros(self.space)
        else:
            kernel = KernelOperator(
                self.space, (1.0 - survive) * rank_one(self.jump_target).entries
            )
        return StructuredOperator(kernel, SingularPart(survive, self.shift_perm(steps)))

    def __repr__(self) -> str:
        return f"PdmpModel(n={self.space.n}, jump_rate={self.jump_rate})"


Model: TypeAlias = Union[CtmcModel, DtmcModel, PdmpModel]


def is_grid_model(model: Model) -> bool:
    return model.time_step is not None


def grid_steps(model: Model, t: float) -> int:
    """
    Number of grid steps for time ``t`` on a grid model.

    Raises:
        ValidationError: If ``t`` is negative or not a multiple of Δ
    """
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    step = model.time_step or CELL_WIDTH
    k = round(t / step)
    if abs(k * step - t) > GRID_TOL * max(1.0, abs(t)):
        raise ValidationError(f"time {t} is not on the grid {step}·ℕ₀ of {model!r}")
    return int(k)


def _mass_tolerance(space: StateSpace, rates: np.ndarray, tol: float) -> np.ndarray:
    return tol * space.weights * np.maximum(1.0, np.abs(np.diag(rates)))


def build_ctmc(space: StateSpace, rates: ArrayLike, tol: float = DEFAULT_TOL) -> CtmcModel:
    """
    Validate a rate matrix and wrap it as a model.

    Args:
        space: State space carrying the cell masses
        rates: n×n matrix Q in density coordinates
        tol: Tolerance for the column mass-conservation check

    Returns:
        Validated CtmcModel

    Raises:
        ValidationError: Negative off-diagonal rate, shape mismatch, or
            ``|Σ_i μ_i q_ij| > tol`` in some column
    """
    return _validated_ctmc(space, rates, tol)


def _validated_ctmc(
    space: StateSpace, rates: ArrayLike, tol: float, atom: Optional[int] = None
) -> CtmcModel:
    q = np.array(rates, dtype=float)
    n = space.n
    if q.shape != (n, n):
        raise ValidationError(f"rate matrix must be {n}x{n}, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValidationError("rate matrix contains non-finite values")
    off = q - np.diag(np.diag(q))
    if np.any(off < 0):
        i, j = np.argwhere(off < 0)[0]
        raise ValidationError(f"negative off-diagonal rate q[{i},{j}] = {q[i, j]}")
    leak = space.weights @ q
    bad = np.abs(leak) > _mass_tolerance(space, q, tol)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ValidationError(
            f"rate matrix does not conserve mass in column {j} (Σ μ_i q_ij = {leak[j]:.3e})"
        )
    q.flags.writeable = False
    if atom is None:
        return CtmcModel(space, q)
    return AtomModel(space, q, atom=atom)


def build_dtmc(space: StateSpace, step: ArrayLike, tol: float = DEFAULT_TOL) -> DtmcModel:
    """
    Validate a stochastic step matrix.

    Raises:
        ValidationError: If the step is not stochastic within ``tol``
    """
    kernel = KernelOperator(space, np.array(step, dtype=float))
    if not is_stochastic(kernel, tol):
        raise ValidationError("step matrix is not stochastic")
    return DtmcModel(space, kernel)


def build_pdmp(
    n: int, jump_rate: float, jump_target: Optional[ArrayLike] = None
) -> PdmpModel:
    """
    Build a rotation-plus-jump model on ``n`` unit cells.

    Args:
        n: Number of cells on the circle
        jump_rate: Jump intensity λ >= 0
        jump_target: Target density ν (default: uniform, density 1/n)

    Raises:
        ValidationError: If λ < 0, ν is negative, has mass != 1, or is not
            shift invariant within 1e-12
    """
    if n < 1:
        raise ValidationError(f"cell count must be >= 1, got {n}")
    if not math.isfinite(jump_rate) or jump_rate < 0:
        raise ValidationError(f"jump rate must be >= 0, got {jump_rate}")
    space = StateSpace.uniform(n, CELL_WIDTH)
    values = np.full(n, 1.0 / n) if jump_target is None else np.array(jump_target, float)
    nu = Density(space, values)
    if not nu.is_positive():
        raise ValidationError("jump target must be nonnegative")
    if abs(nu.mass - 1.0) > GRID_TOL:
        raise ValidationError(f"jump target must have mass 1, got {nu.mass}")
    if np.max(np.abs(np.roll(nu.values, 1) - nu.values)) > GRID_TOL:
        raise ValidationError("jump target is not invariant under the cell shift")
    return PdmpModel(space, float(jump_rate), nu)


def build_rotation(n: int) -> PdmpModel:
    """Pure rotation: ``build_pdmp(n, 0)``."""
    return build_pdmp(n, 0.0)


def cyclic_dtmc(n: int) -> DtmcModel:
    """Deterministic cycle ``j → j+1 mod n`` as a DTMC."""
    space = StateSpace.uniform(n)
    step = np.zeros((n, n))
    step[(np.arange(n) + 1) % n, np.arange(n)] = 1.0
    return build_dtmc(space, step)


def block_diagonal_ctmc(blocks: Sequence[ArrayLike]) -> CtmcModel:
    """Direct sum of rate matrices on unit-mass cells (a reducible model)."""
    q = scipy.linalg.block_diag(*[np.asarray(b, dtype=float) for b in blocks])
    return build_ctmc(StateSpace.uniform(q.shape[0]), q)


def _random_rates(
    rng: np.random.Generator, weights: np.ndarray, density: float
) -> np.ndarray:
    n = weights.size
    mask = rng.random((n, n)) < density
    q = np.where(mask, rng.uniform(0.1, 1.0, size=(n, n)), 0.0)
    order = rng.permutation(n)
    src, dst = order, np.roll(order, -1)
    q[dst, src] = np.maximum(q[dst, src], rng.uniform(0.1, 1.0, size=n))
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -(weights @ q) / weights)
    return q


def random_irreducible_ctmc(
    n: int,
    density: float,
    seed: int,
    weights: Optional[ArrayLike] = None,
) -> CtmcModel:
    """
    Seeded random irreducible rate matrix.

    Off-diagonal entries are present with probability ``density`` and drawn
    from U(0.1, 1); a random Hamiltonian cycle is always added so the graph is
    strongly connected. Diagonals are set for mass conservation. The generator
    is ``numpy.random.Generator(PCG64(seed))``.

    Args:
        n: Number of cells (>= 2)
        density: Edge probability in (0, 1]
        seed: Seed for reproducibility
        weights: Cell masses (default: all ones)
    """
    if n < 2:
        raise ValidationError(f"random models need n >= 2, got {n}")
    if not 0.0 < density <= 1.0:
        raise ValidationError(f"density must lie in (0, 1], got {density}")
    rng = np.random.Generator(np.random.PCG64(seed))
    space = StateSpace(np.ones(n) if weights is None else np.asarray(weights, float))
    return build_ctmc(space, _random_rates(rng, space.weights, density))


def build_atom_model(
    n: int,
    atom: int = 0,
    atom_mass: float = 0.5,
    return_rate: float = 1.0,
    density: float = 0.5,
    seed: int = 0,
) -> AtomModel:
    """
    Irreducible CTMC on ``n`` cells where cell ``atom`` carries mass
    ``atom_mass`` and the remaining mass is spread evenly over the other cells.

    Every other cell feeds the atom at rate at least ``return_rate``.
    """
    if n < 2:
        raise ValidationError(f"atom models need n >= 2, got {n}")
    if not 0 <= atom < n:
        raise ValidationError(f"atom index {atom} out of range for {n} cells")
    if not 0.0 < atom_mass < 1.0:
        raise ValidationError(f"atom mass must lie in (0, 1), got {atom_mass}")
    if return_rate <= 0:
        raise ValidationError(f"return rate must be > 0, got {return_rate}")
    weights = np.full(n, (1.0 - atom_mass) / (n - 1))
    weights[atom] = atom_mass
    rng = np.random.Generator(np.random.PCG64(seed))
    q = _random_rates(rng, weights, density)
    others = np.arange(n) != atom
    q[atom, others] = np.maximum(q[atom, others], return_rate)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -(weights @ q) / weights)
    model = _validated_ctmc(StateSpace(weights), q, DEFAULT_TOL, atom=atom)
    assert isinstance(model, AtomModel)
    return model


def random_atom_model(seed: int) -> AtomModel:
    """Seeded atom model with 3..8 cells, random atom position and mass."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.integers(3, 9))
    return build_atom_model(
        n,
        atom=int(rng.integers(0, n)),
        atom_mass=float(rng.uniform(0.2, 0.6)),
        return_rate=float(rng.uniform(0.2, 1.0)),
        density=float(rng.uniform(0.2, 0.8)),
        seed=int(rng.integers(0, 2**31)),
    )


def transition_graph(model: Model) -> "nx.DiGraph":
    """
    Directed graph with an edge ``j → i`` whenever mass can move from cell
    ``j`` to cell ``i`` in one generator step.
    """
    n = model.space.n
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    if isinstance(model, CtmcModel):
        feeds = model.rates > 0
        np.fill_diagonal(feeds, False)
    elif isinstance(model, DtmcModel):
        feeds = model.step.entries > 0
    else:
        feeds = np.zeros((n, n), dtype=bool)
        feeds[list(model.shift_perm(1)), np.arange(n)] = True
        if not model.is_pure_shift:
            feeds |= (model.jump_target.values > 0)[:, None]
    dst, src = np.nonzero(feeds)
    graph.add_edges_from(zip(src.tolist(), dst.tolist()))
    return graph


def is_irreducible(model: Model) -> bool:
    """Strong connectivity of the transition graph."""
    return bool(nx.is_strongly_connected(transition_graph(model)))


def generator_matrix(model: Model) -> np.ndarray:
    """
    Rate matrix ``Q`` of a CTMC, or the grid surrogate ``(T_Δ − I)/Δ`` of a
    grid model. The surrogate shares the fixed space and transition graph of
    the grid semigroup.
    """
    if isinstance(model, CtmcModel):
        return np.array(model.rates)
    if isinstance(model, DtmcModel):
        step = dense(model.step)
    else:
        step = dense(model.transition(1))
    return (step - np.eye(model.space.n)) / CELL_WIDTH


__all__ = [
    "CtmcModel",
    "AtomModel",
    "DtmcModel",
    "PdmpModel",
    "Model",
    "ModelKind",
    "CELL_WIDTH",
    "is_grid_model",
    "grid_steps",
    "build_ctmc",
    "build_dtmc",
    "build_pdmp",
    "build_rotation",
    "cyclic_dtmc",
    "block_diagonal_ctmc",
    "random_irreducible_ctmc",
    "build_atom_model",
    "random_atom_model",
    "transition_graph",
    "is_irreducible",
    "generator_matrix",
]

"""
Tests for model construction and irreducibility.
"""

import numpy as np
import pytest

from ergocert.errors import ValidationError
from ergocert.lattice import StateSpace, dense
from ergocert.models import (
    AtomModel,
    block_diagonal_ctmc,
    build_atom_model,
    build_ctmc,
    build_dtmc,
    build_pdmp,
    build_rotation,
    cyclic_dtmc,
    generator_matrix,
    grid_steps,
    is_grid_model,
    is_irreducible,
    random_atom_model,
    random_irreducible_ctmc,
    transition_graph,
)

from .oracles import TWO_STATE_RATES


def test_build_ctmc_valid(two_state):
    assert two_state.kind == "ctmc"
    assert not is_grid_model(two_state)
    assert build_ctmc(StateSpace.uniform(3), np.zeros((3, 3))).space.n == 3


def test_build_ctmc_rejects_mass_leak():
    with pytest.raises(ValidationError, match="column"):
        build_ctmc(StateSpace.uniform(2), [[-1.0, 0.0], [0.0, 0.0]])


def test_build_ctmc_rejects_negative_off_diagonal():
    with pytest.raises(ValidationError, match="negative"):
        build_ctmc(StateSpace.uniform(2), [[1.0, -1.0], [-1.0, 1.0]])


def test_build_ctmc_rejects_shape_mismatch():
    with pytest.raises(ValidationError):
        build_ctmc(StateSpace.uniform(3), TWO_STATE_RATES)


def test_build_ctmc_weighted_conservation():
    """Columns conserve Σ μ_i q_ij, not the plain column sum."""
    space = StateSpace(np.array([2.0, 1.0]))
    q = [[-0.5, 2.0], [1.0, -4.0]]
    model = build_ctmc(space, q)
    np.testing.assert_allclose(space.weights @ model.rates, [0.0, 0.0])


def test_build_dtmc_requires_stochastic_step():
    space = StateSpace.uniform(2)
    assert build_dtmc(space, [[0.5, 0.5], [0.5, 0.5]]).kind == "dtmc"
    with pytest.raises(ValidationError):
        build_dtmc(space, [[1.0, 0.0], [0.1, 1.0]])


def test_is_irreducible_examples(two_state, cycle3):
    assert is_irreducible(two_state)
    assert is_irreducible(cycle3)
    reducible = block_diagonal_ctmc([TWO_STATE_RATES, TWO_STATE_RATES])
    assert reducible.space.n == 4
    assert not is_irreducible(reducible)


def test_random_irreducible_ctmc_is_deterministic():
    a = random_irreducible_ctmc(5, 0.3, seed=7)
    b = random_irreducible_ctmc(5, 0.3, seed=7)
    np.testing.assert_array_equal(a.rates, b.rates)
    assert is_irreducible(a)


@pytest.mark.parametrize("seed", range(10))
def test_random_irreducible_ctmc_passes_validation(seed):
    model = random_irreducible_ctmc(2 + seed, 0.4, seed=seed)
    assert is_irreducible(model)
    rebuilt = build_ctmc(model.space, model.rates)
    np.testing.assert_array_equal(rebuilt.rates, model.rates)


def test_random_irreducible_ctmc_argument_checks():
    with pytest.raises(ValidationError):
        random_irreducible_ctmc(1, 0.5, seed=0)
    with pytest.raises(ValidationError):
        random_irreducible_ctmc(4, 0.0, seed=0)


def test_build_pdmp_examples():
    model = build_pdmp(4, 1.0)
    np.testing.assert_allclose(model.jump_target.values, 0.25)
    assert is_grid_model(model)

    rotation = build_pdmp(4, 0.0)
    assert rotation.is_pure_shift
    assert rotation.transition(1).kernel.is_zero

    with pytest.raises(ValidationError, match="shift"):
        build_pdmp(4, 1.0, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        build_pdmp(4, -1.0)
    with pytest.raises(ValidationError):
        build_pdmp(4, 1.0, [0.5, 0.5, 0.5, 0.5])


def test_pdmp_transition_closed_form(pdmp4):
    op = pdmp4.transition(1)
    assert op.singular_weight == pytest.approx(np.exp(-1.0))
    assert op.singular.perm == (1, 2, 3, 0)
    np.testing.assert_allclose(op.kernel.entries, (1 - np.exp(-1.0)) / 4)


def test_rotation_and_cycle_are_irreducible():
    assert is_irreducible(build_rotation(5))
    graph = transition_graph(build_rotation(3))
    assert set(graph.edges) == {(0, 1), (1, 2), (2, 0)}


def test_grid_steps():
    model = cyclic_dtmc(3)
    assert grid_steps(model, 4.0) == 4
    with pytest.raises(ValidationError, match="grid"):
        grid_steps(model, 0.5)
    with pytest.raises(ValidationError):
        grid_steps(model, -1.0)


def test_generator_matrix_grid_surrogate(cycle3):
    np.testing.assert_allclose(generator_matrix(cycle3), dense(cycle3.step) - np.eye(3))


def test_atom_model():
    model = build_atom_model(5, atom=2, atom_mass=0.4, return_rate=0.5, seed=3)
    assert isinstance(model, AtomModel)
    assert model.atom_mass == pytest.approx(0.4)
    assert model.space.total_mass == pytest.approx(1.0)
    assert model.return_rate >= 4 * 0.5
    assert is_irreducible(model)

    with pytest.raises(ValidationError):
        build_atom_model(3, atom=3)
    with pytest.raises(ValidationError):
        build_atom_model(3, atom_mass=1.0)


def test_random_atom_model_is_deterministic():
    a, b = random_atom_model(11), random_atom_model(11)
    assert a.atom == b.atom
    np.testing.assert_array_equal(a.rates, b.rates)
    assert 3 <= a.space.n <= 8


def _reaches_everywhere(adjacency):
    n = adjacency.shape[0]
    paths = np.linalg.matrix_power(np.eye(n, dtype=int) + (adjacency > 0), n - 1)
    return bool(np.all(paths > 0))


@pytest.mark.parametrize("seed", range(40))
def test_is_irreducible_matches_path_counting(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.integers(2, 9))
    mask = rng.random((n, n)) < rng.uniform(0.1, 0.5)
    np.fill_diagonal(mask, False)
    weights = np.ones(n)

    rates = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0)
    np.fill_diagonal(rates, -rates.sum(axis=0))
    chain = build_ctmc(StateSpace(weights), rates)
    assert is_irreducible(chain) == _reaches_everywhere(mask)

    step = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0) + 0.5 * np.eye(n)
    walk = build_dtmc(StateSpace(weights), step / step.sum(axis=0))
    assert is_irreducible(walk) == _reaches_everywhere(mask)

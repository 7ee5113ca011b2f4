"""
Tests for resolvents, stationary densities and the equivalence suite.
"""

import json
import math

import numpy as np
import pytest

from ergocert.errors import ConsistencyError, NotIrreducibleError, ValidationError
from ergocert.evolution import semigroup_at
from ergocert.lattice import DualVector, StateSpace, apply, l1_norm, ones
from ergocert.models import (
    block_diagonal_ctmc,
    build_ctmc,
    build_pdmp,
    random_atom_model,
    random_irreducible_ctmc,
)
from ergocert.serialization import dump_json, suite_to_dict
from ergocert.spectral import (
    CONDITIONS,
    corollary_suite,
    domination_check,
    dual_irreducibility,
    dual_resolvent_quasi_interior,
    laplace_consistency,
    limit_projection,
    mean_ergodic_check,
    projection_properties,
    resolvent,
    resolvent_identity_residual,
    spectral_report,
    stationary_density,
    zero_pole_check,
)

from .oracles import TWO_STATE_RATES


@pytest.fixture
def reducible():
    return block_diagonal_ctmc([TWO_STATE_RATES, TWO_STATE_RATES])


def test_resolvent_examples(two_state):
    np.testing.assert_allclose(resolvent(two_state, 1.0).entries, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
    zero = build_ctmc(StateSpace.uniform(3), np.zeros((3, 3)))
    np.testing.assert_allclose(resolvent(zero, 1.0).entries, np.eye(3))
    with pytest.raises(ValidationError):
        resolvent(two_state, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_resolvent_identity(seed):
    model = random_irreducible_ctmc(3 + seed, 0.5, seed=seed)
    for lam, nu in ((0.5, 1.0), (1.0, 2.0), (0.3, 5.0)):
        assert resolvent_identity_residual(model, lam, nu) <= 1e-9


def test_stationary_density_examples(two_state, pdmp4, cycle3):
    np.testing.assert_allclose(stationary_density(two_state).g.values, [0.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(stationary_density(pdmp4).g.values, np.full(4, 0.25), atol=1e-14)
    np.testing.assert_allclose(stationary_density(cycle3).g.values, np.full(3, 1 / 3), atol=1e-14)


def test_stationary_density_reducible_raises(reducible):
    with pytest.raises(NotIrreducibleError):
        stationary_density(reducible)


@pytest.mark.parametrize("seed", range(6))
def test_stationary_density_is_invariant(seed):
    weights = np.linspace(0.2, 2.0, 4 + seed)
    model = random_irreducible_ctmc(4 + seed, 0.4, seed=seed, weights=weights)
    g = stationary_density(model).g
    assert g.mass == pytest.approx(1.0, abs=1e-12)
    assert g.is_positive()
    image = apply(semigroup_at(model, 1.3), g)
    assert l1_norm(image - g) <= 1e-10


def test_atom_model_stationary_density():
    model = random_atom_model(5)
    g = stationary_density(model).g
    assert np.all(g.values > 0)
    assert g.mass == pytest.approx(1.0)


def test_projection_properties(two_state):
    report = projection_properties(two_state, [0.5, 1.0, 3.0])
    assert report.passed()
    assert report.rank == 1


def test_zero_pole_check_examples(two_state, reducible):
    check = zero_pole_check(two_state)
    assert check.is_simple_pole
    assert check.gap == pytest.approx(2.0)

    reducible_check = zero_pole_check(reducible)
    assert not reducible_check.is_simple_pole
    assert spectral_report(reducible).zero_multiplicity[0] == 2


def test_spectral_report_grid_model(pdmp4, rotation4):
    report = spectral_report(pdmp4)
    assert report.one_step
    assert report.spectral_gap == pytest.approx(1.0)
    assert report.zero_multiplicity == (1, 1)

    rotation = spectral_report(rotation4)
    assert rotation.spectral_gap == pytest.approx(0.0, abs=1e-12)
    assert len(rotation.peripheral) == 4
    assert not zero_pole_check(rotation4).applicable


def test_mean_ergodic_two_state(two_state):
    grid = [float(t) for t in range(1, 33)]
    report = mean_ergodic_check(two_state, grid)
    assert report.passed
    assert report.fitted_c <= 1.0
    assert report.monotone
    # ‖C_t − P‖ = (1 − e^{−2t})/(2t)
    for t, d in zip(report.times, report.distances):
        assert d == pytest.approx((1 - math.exp(-2 * t)) / (2 * t), abs=1e-10)


def test_mean_ergodic_cycle_exact(cycle3):
    report = mean_ergodic_check(cycle3, [3.0, 6.0, 9.0])
    assert max(report.distances) <= 1e-15


def test_mean_ergodic_reducible_raises(reducible):
    with pytest.raises(NotIrreducibleError):
        mean_ergodic_check(reducible, [1.0, 2.0])


def test_mean_ergodic_needs_positive_times(two_state):
    with pytest.raises(ValidationError):
        mean_ergodic_check(two_state, [0.0])


def test_dual_quasi_interior_examples(two_state, reducible):
    f = DualVector(two_state.space, [1.0, 0.0])
    assert dual_resolvent_quasi_interior(two_state, f, 1.0, 0.33)
    assert not dual_resolvent_quasi_interior(two_state, f, 1.0, 0.34)

    g = DualVector(reducible.space, [1.0, 1.0, 0.0, 0.0])
    for eps in (1e-300, 1e-12, 0.1):
        assert not dual_resolvent_quasi_interior(reducible, g, 1.0, eps)

    # λR(λ)′𝟙 = 𝟙 for stochastic semigroups
    assert dual_resolvent_quasi_interior(two_state, ones(two_state.space), 1.0, 1.0 - 1e-12)


def test_dual_quasi_interior_argument_checks(two_state):
    with pytest.raises(ValidationError):
        dual_resolvent_quasi_interior(two_state, DualVector(two_state.space, [0.0, 0.0]), 1.0, 0.1)
    with pytest.raises(ValidationError):
        dual_resolvent_quasi_interior(two_state, ones(two_state.space), 1.0, 0.0)


def test_dual_irreducibility(two_state, reducible):
    assert dual_irreducibility(two_state)
    assert not dual_irreducibility(reducible)
    assert dual_irreducibility(random_irreducible_ctmc(8, 0.2, seed=4))


def test_laplace_consistency(two_state):
    model = random_irreducible_ctmc(4, 0.5, seed=1)
    for m in (two_state, model):
        report = laplace_consistency(m, 1.0)
        assert report.residual <= 1e-6


def test_laplace_consistency_needs_rates(pdmp4):
    with pytest.raises(ValidationError):
        laplace_consistency(pdmp4, 1.0)


def test_domination_check():
    model = random_irreducible_ctmc(5, 0.5, seed=8)
    report = domination_check(model)
    assert report.passed
    assert report.max_violation <= 1e-9


def test_corollary_suite_two_state(two_state):
    suite = corollary_suite(two_state)
    assert suite.hypothesis_met
    assert suite.reason == "met"
    assert set(suite.conditions) == set(CONDITIONS)
    assert all(suite.conditions.values())
    assert suite.agree


def test_corollary_suite_pdmp(pdmp4):
    suite = corollary_suite(pdmp4)
    assert suite.hypothesis_met
    assert all(suite.conditions.values())


def test_corollary_suite_rotation_hypothesis_not_met(rotation4):
    suite = corollary_suite(rotation4)
    assert not suite.hypothesis_met
    assert suite.reason == "kernel part zero"
    assert not suite.conditions["i"]


def test_corollary_suite_inapplicable_models(reducible, cycle3):
    split_chain = corollary_suite(reducible)
    assert split_chain.reason == "reducible"
    assert not split_chain.conditions["iv"]
    assert not split_chain.conditions["v"]
    assert not split_chain.conditions["vi"]
    suite = corollary_suite(cycle3)
    assert suite.reason == "discrete-time"
    assert not suite.hypothesis_met


@pytest.mark.parametrize("seed", range(5))
def test_corollary_suite_random_models_agree(seed):
    suite = corollary_suite(random_irreducible_ctmc(3 + seed, 0.4, seed=seed))
    assert suite.hypothesis_met
    assert suite.agree
    assert suite.conditions["i"]


def test_corollary_suite_slow_chain_agrees():
    slow = build_ctmc(StateSpace.uniform(2), [[-0.01, 0.01], [0.01, -0.01]])
    suite = corollary_suite(slow)
    assert suite.hypothesis_met
    assert suite.agree, suite.conditions
    assert all(suite.conditions.values())


def test_corollary_suite_values_are_plain_bools(two_state, reducible):
    for model in (two_state, reducible):
        suite = corollary_suite(model)
        assert all(type(value) is bool for value in suite.conditions.values())
        json.loads(dump_json(suite_to_dict(suite)))


def test_mean_ergodic_passed_is_plain_bool(two_state):
    report = mean_ergodic_check(two_state, [1.0, 2.0, 4.0, 8.0])
    assert type(report.passed) is bool
    assert type(report.monotone) is bool


def test_consistency_error_carries_evidence():
    err = ConsistencyError("disagree", {"i": True, "ii": False})
    assert err.evidence == {"i": True, "ii": False}
    assert str(err) == "disagree"


def test_limit_projection_weighted_space():
    model = build_pdmp(3, 2.0)
    p = limit_projection(model)
    np.testing.assert_allclose(p.entries, np.full((3, 3), 1 / 3), atol=1e-14)

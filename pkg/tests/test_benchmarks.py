"""
Timing of the numerical kernels with pytest-benchmark.

Run with ``pytest -m benchmark --benchmark-only``.
"""

import pytest

from ergocert.evolution import block_cesaro, semigroup_at, uniformized_exponential
from ergocert.lattice import op_distance
from ergocert.lower_bounds import maximal_lower_bound_at
from ergocert.models import build_pdmp, random_irreducible_ctmc
from ergocert.spectral import corollary_suite, limit_projection, stationary_density

pytestmark = pytest.mark.benchmark


@pytest.fixture(scope="module")
def chain12():
    return random_irreducible_ctmc(12, 0.5, seed=3)


def test_uniformization(benchmark, chain12):
    result = benchmark(uniformized_exponential, chain12.rates, 5.0)
    assert result.shape == (12, 12)


def test_block_cesaro(benchmark, chain12):
    result = benchmark(block_cesaro, chain12.rates, 5.0)
    assert result.shape == (12, 12)


def test_stationary_density(benchmark, chain12):
    result = benchmark(stationary_density, chain12)
    assert result.g.mass == pytest.approx(1.0)


def test_maximal_lower_bound(benchmark, chain12):
    op = semigroup_at(chain12, 2.0)
    h = benchmark(maximal_lower_bound_at, op)
    assert h.mass > 0


def test_pdmp_distance(benchmark):
    model = build_pdmp(16, 1.0)
    projection = limit_projection(model)
    distance = benchmark(lambda: op_distance(semigroup_at(model, 10.0), projection))
    assert distance > 0


def test_corollary_suite(benchmark):
    model = random_irreducible_ctmc(6, 0.5, seed=1)
    suite = benchmark(corollary_suite, model)
    assert suite.agree

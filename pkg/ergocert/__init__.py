"""
ergocert - uniform convergence certificates for finite stochastic semigroups.

Models are finite-state continuous-time chains, discrete-time chains and
rotation-plus-jump processes on a circle of cells, written in density
coordinates. The package evaluates their semigroups and Cesàro means, derives
Doeblin-type lower bounds, cross-checks the equivalent characterisations of
uniform mean ergodicity and replays the bootstrap proof chain numerically.
"""

__version__ = "0.1.0"

import logging
import os

from . import certify, evolution, lattice, lower_bounds, models, spectral
from .certify import ProofChainReport, ProofStep, verify_proof_chain
from .config import DEFAULT_TOL, Settings, get_settings, reload_settings
from .errors import (
    AuditError,
    ConfigurationError,
    ConsistencyError,
    ErgocertError,
    NotIrreducibleError,
    SearchExhaustedError,
    ValidationError,
)
from .evolution import (
    CesaroEvaluator,
    SemigroupEvaluator,
    cesaro_mean,
    decomposition_at,
    semigroup_at,
    split,
)
from .lattice import (
    Density,
    DualVector,
    KernelOperator,
    SingularPart,
    StateSpace,
    StructuredOperator,
)
from .logging_utils import configure_logging
from .lower_bounds import (
    ConvergenceCertificate,
    NoCertificate,
    certify_uniform_convergence,
    deficiency,
    find_certificate,
    maximal_lower_bound_at,
)
from .models import (
    AtomModel,
    CtmcModel,
    DtmcModel,
    PdmpModel,
    build_ctmc,
    build_dtmc,
    build_pdmp,
    build_rotation,
    is_irreducible,
)
from .profiler import StageProfiler, create_profiler
from .serialization import load_model, write_bundle
from .spectral import (
    CorollarySuite,
    SpectralReport,
    corollary_suite,
    spectral_report,
    stationary_density,
)

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "__version__",
    # Modules
    "lattice",
    "models",
    "evolution",
    "lower_bounds",
    "spectral",
    "certify",
    # Errors
    "ErgocertError",
    "ValidationError",
    "NotIrreducibleError",
    "ConfigurationError",
    "AuditError",
    "ConsistencyError",
    "SearchExhaustedError",
    # Configuration
    "DEFAULT_TOL",
    "Settings",
    "get_settings",
    "reload_settings",
    "configure_logging",
    # Lattice
    "StateSpace",
    "Density",
    "DualVector",
    "KernelOperator",
    "SingularPart",
    "StructuredOperator",
    # Models
    "CtmcModel",
    "AtomModel",
    "DtmcModel",
    "PdmpModel",
    "build_ctmc",
    "build_dtmc",
    "build_pdmp",
    "build_rotation",
    "is_irreducible",
    # Evolution
    "semigroup_at",
    "cesaro_mean",
    "split",
    "decomposition_at",
    "SemigroupEvaluator",
    "CesaroEvaluator",
    # Lower bounds
    "deficiency",
    "maximal_lower_bound_at",
    "certify_uniform_convergence",
    "find_certificate",
    "ConvergenceCertificate",
    "NoCertificate",
    # Spectral
    "SpectralReport",
    "spectral_report",
    "stationary_density",
    "CorollarySuite",
    "corollary_suite",
    # Proof chain
    "ProofStep",
    "ProofChainReport",
    "verify_proof_chain",
    # I/O and profiling
    "load_model",
    "write_bundle",
    "StageProfiler",
    "create_profiler",
]


# Install the stderr handler when a level is requested through the environment
if os.environ.get("ERGOCERT_LOG_LEVEL"):
    try:
        configure_logging()
    except ConfigurationError as e:
        import warnings

        warnings.warn(f"Ignoring ERGOCERT_LOG_LEVEL: {e}", RuntimeWarning)

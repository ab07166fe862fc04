"""Entropy growth of Gaussian bipartite systems versus quantum Lyapunov exponents."""

from .analysis import (
    EntropySeries,
    RateFit,
    RateReport,
    Sampling,
    compare_rate,
    determinant_series,
    fit_asymptotic_rate,
    upper_lyapunov,
)
from .dynamics import (
    FloquetSpectrum,
    MathieuSolution,
    ModelKind,
    QuadraticModel,
    SymplecticMatrix,
    constant_generator_spectrum,
    coupled_lyapunov,
    coupled_parametric,
    custom_periodic,
    evolve_covariance,
    floquet_spectrum,
    flow_generator,
    ihe,
    mathieu_basis,
    mathieu_characteristic_exponent,
    mathieu_solution,
    monodromy,
    normal_mode_parameters,
    propagate_dense,
    propagate_fundamental,
    single_parametric,
    symplectic_defect,
)
from .errors import (
    ConfigError,
    DomainError,
    DynamicsOverflow,
    GaussentError,
    InvalidStateError,
    NotAsymptoticError,
)
from .gaussian import (
    GaussianState,
    entropy_from_determinant,
    entropy_from_nu,
    make_single_mode_state,
    product_state,
    reduce_mode,
    schrodinger_determinant,
    squeezer,
    symplectic_eigenvalues,
    symplectic_form,
    vacuum,
)
from .qbme import QbmeParams, qbme_entropy_series, qbme_nu, qbme_second_moments

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Parity-resolved Bose-Hubbard chaos diagnostics."""

from fractions import Fraction

from . import _core
from ._core import (
    CapacityError,
    ConfigError,
    DegenerateError,
    DomainError,
    Error,
    basis_states,
    canonical_config,
    delta1,
    dim_sector,
    eigenvalues,
    eta_star,
    full_dimension,
    gfd,
    goe_c1,
    goe_mean_d1,
    goe_pool,
    goe_r_samples,
    hamiltonian,
    kl_to_goe,
    mean_r_goe,
    p_goe,
    r_values,
    run_trajectory,
    window,
)

__version__ = _core.__version__


def ratio_R(L, N):
    """Exact ratio of non-interacting to interacting odd-sector states."""
    num, den = _core.ratio_R(L, N)
    return Fraction(num, den)

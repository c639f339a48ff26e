from .omega import (
    TiltParams,
    OmegaValue,
    omega_tensor,
    omega_table,
    omega_values,
    omega_variances,
    omega_of_q,
    tilted_distribution,
)
from .exponent import (
    matched_points,
    OmegaMin,
    omega_min,
    f_lambda,
    f_theta,
    ExponentSearch,
    OmegaSurface,
    ExponentResult,
    exponent_F,
    RhoEstimate,
    rho_pairs,
    rho_search,
    rho_estimate,
    ChainReport,
    tilt_chain_margin,
    g_inverse,
    f_positivity_bound,
    kappa_n,
)

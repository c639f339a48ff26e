from .region import (
    optimal_decoder_map,
    decoded_distortion,
    RMuSolution,
    solve_r_mu,
    r_mu,
    HyperplaneCurve,
    hyperplane_curve,
    default_mu_grid,
    envelope,
    Membership,
    region_membership,
    RTildeSolution,
    r_tilde_objective,
    solve_r_tilde,
    r_tilde,
    SandwichConstants,
    sandwich_constants,
    SandwichReport,
    sandwich_check,
)

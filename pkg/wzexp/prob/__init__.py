from .source import SourceModel, load_source, TOLERANCE
from .joint import JointQ, SupportMap, ratio
from .measures import (
    Marginals,
    Conditionals,
    InfoBundle,
    conditionals,
    info_measures,
    i_x_u_given_y,
    i_x_z_given_uy,
    d_qx_px,
    d_qyxu_pyx,
    d_qxuy_pxy,
    d_qxy_pxy,
    expected_distortion,
    kl_divergence,
    total_variation,
)

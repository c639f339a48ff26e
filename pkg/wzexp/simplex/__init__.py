from .optimizer import (
    OptimizerConfig,
    OptimizerReport,
    Simplex,
    minimize,
    grid_refine,
    GRADIENT_STEP,
)

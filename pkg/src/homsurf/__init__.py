"""Surface theory in the homogeneous 3-manifolds E(kappa, tau), numerically.

Generate fundamental data (lambda, u, H, p, A) on conformal grids, check
the integrability equations by finite differences, compute the
Abresch-Rosenberg differential, and rebuild surfaces by frame integration.
"""

from .differentials import (
    Feasibility,
    abresch_rosenberg,
    ar_P,
    codazzi_Q_residual,
    feasibility_audit,
    holomorphy_residual,
    non_cmc_structure_residuals,
    zero_Q_cmc_audit,
)
from .families import (
    CMCParams,
    Example31Params,
    Example32Params,
    Example33Params,
    gen_cmc_control,
    gen_example31,
    gen_example32,
    gen_example33,
    generate,
)
from .fundamental import FundamentalField, ResidualReport, ToleranceProfile, check_all, flip_orientation
from .grid import ConformalGrid, ScalarField, d_s, d_t, d_z, d_zbar, residual_norm
from .ode import rk4_integrate, safeguarded_newton
from .reconstruction import (
    FrameState,
    SurfaceMesh,
    extract_fundamental_data,
    integrate_surface,
    path_independence_check,
    verify_reconstruction,
)
from .space import AmbientChart, SpaceFamily, SpaceParams, classify

__version__ = "0.1.0"

__all__ = [
    "AmbientChart", "CMCParams", "ConformalGrid", "Example31Params", "Example32Params",
    "Example33Params", "Feasibility", "FrameState", "FundamentalField", "ResidualReport",
    "ScalarField", "SpaceFamily", "SpaceParams", "SurfaceMesh", "ToleranceProfile",
    "abresch_rosenberg", "ar_P", "check_all", "classify", "codazzi_Q_residual", "d_s", "d_t",
    "d_z", "d_zbar", "extract_fundamental_data", "feasibility_audit", "flip_orientation",
    "gen_cmc_control", "gen_example31", "gen_example32", "gen_example33", "generate",
    "holomorphy_residual", "integrate_surface", "non_cmc_structure_residuals",
    "path_independence_check", "residual_norm", "rk4_integrate", "safeguarded_newton",
    "verify_reconstruction", "zero_Q_cmc_audit",
]

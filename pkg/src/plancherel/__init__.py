"""Harmonic analysis of K-biinvariant functions on rank-one and rank-two
noncompact symmetric spaces.

The pieces fit together in layers: :mod:`plancherel.rootdata` fixes restricted
root systems and Weyl groups in B-orthonormal coordinates, :mod:`.groups`
realizes the three matrix models with their decompositions and Haar
calibrations, :mod:`.cfunc` evaluates the meromorphic density factor both as a
rank-one product and as a unipotent integral, :mod:`.spherical` evaluates the
zonal eigenfunctions (compact integral near the origin, boundary series far
out) and their constant-term asymptotics, and :mod:`.transform` builds the
spectral transforms, wave packets, and lattice averages on top.  ``python -m
plancherel.cli`` (installed as ``plancherel``) drives everything from the
command line with JSON reports.
"""

from .cfunc import CFunctionEngine, SpectralDensityTable
from .errors import (
    CalibrationError,
    ConvergenceDomainError,
    InvalidElementError,
    ParameterError,
    PlancherelError,
    PoleError,
    QuadratureError,
    SingularParameterError,
    StateError,
    TruncationError,
)
from .groups import (
    GroupModel,
    HaarNormalization,
    build_model,
    calibrate_cartan_density,
    compute_haar_normalization,
)
from .reporting import PACKAGE_VERSION, CheckResult, Report, RunConfig
from .rootdata import (
    RootDatum,
    SpectralParam,
    WeylGroup,
    build_root_datum,
    weyl_group,
)
from .spherical import (
    RadialPhi,
    SphericalEvaluator,
    constant_term_data,
    constant_term_expansion,
    convolve_radial,
    fit_decay_rate,
    mean_value_check,
    temperedness_bound_check,
    w_invariance_check,
)
from .transform import (
    HoroFunction,
    RadialProfile,
    SpectralSection,
    cesaro_average,
    cesaro_average_generators,
    cesaro_target,
    chamber_grid,
    chamber_regroup_residual,
    horo_parseval_pair,
    horo_transform,
    make_horo_function,
    radial_l2_norm_sq,
    spherical_transform,
    wave_packet,
)

__version__ = PACKAGE_VERSION

__all__ = [
    "CFunctionEngine",
    "SpectralDensityTable",
    "PlancherelError",
    "ParameterError",
    "InvalidElementError",
    "ConvergenceDomainError",
    "PoleError",
    "SingularParameterError",
    "QuadratureError",
    "CalibrationError",
    "TruncationError",
    "StateError",
    "GroupModel",
    "HaarNormalization",
    "build_model",
    "calibrate_cartan_density",
    "compute_haar_normalization",
    "PACKAGE_VERSION",
    "CheckResult",
    "Report",
    "RunConfig",
    "RootDatum",
    "SpectralParam",
    "WeylGroup",
    "build_root_datum",
    "weyl_group",
    "RadialPhi",
    "SphericalEvaluator",
    "constant_term_data",
    "constant_term_expansion",
    "convolve_radial",
    "fit_decay_rate",
    "mean_value_check",
    "temperedness_bound_check",
    "w_invariance_check",
    "HoroFunction",
    "RadialProfile",
    "SpectralSection",
    "cesaro_average",
    "cesaro_average_generators",
    "cesaro_target",
    "chamber_grid",
    "chamber_regroup_residual",
    "horo_parseval_pair",
    "horo_transform",
    "make_horo_function",
    "radial_l2_norm_sq",
    "spherical_transform",
    "wave_packet",
    "__version__",
]

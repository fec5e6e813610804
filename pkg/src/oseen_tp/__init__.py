"""Time-periodic Oseen kernels, a spectral periodic solver and far-field decay tools."""

from .asymptotics import DecayFit, DecayRateEstimator, FarField, fit_decay, leading_coefficient
from .convolve import convolve_gamma0, convolve_gamma_perp, verify_bounds
from .exceptions import (
    AccuracyError,
    DivergenceError,
    DomainError,
    InvalidParameterError,
    NyquistError,
    OseenError,
    RankError,
    ShapeError,
    SingularityError,
)
from .geometry import Ray, default_rays, wake, wake_axis
from .periodic import gamma_perp_modes, gamma_perp_point_oracle, gamma_tp, synthesize_gamma_perp
from .solver import PicardOptions, SolveConfig, picard_solve, solve_linear, weak_residual
from .sources import CompactSource
from .steady import ein, gamma0, grad_gamma0, pressure0
from .torus import Grid, TorusField, read_tpf, write_tpf

__version__ = "0.1.0"

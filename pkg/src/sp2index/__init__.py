"""Rotation-function indices of 2x2 symplectic paths, with Mathieu and pendulum drivers."""

from ._jit import NUMBA_ENABLED
from .errors import *  # noqa: F401,F403
from .sp2core import (
    DEG_TOL,
    EIG_TOL,
    SYMPL_TOL,
    Component,
    EigenTag,
    OmegaPoint,
    SymplecticMatrix2,
    classify_component,
    classify_eigen,
    d_omega,
    krein_sign,
    rotation,
)
from .sympath import (
    HamiltonianSpec,
    IndexReport,
    SampledSymplecticPath,
    Stability,
    StepControl,
    bott_check,
    classify_stability,
    index_i1,
    index_i2,
    index_omega,
    index_report,
    integrate_fundamental,
    iterate_path,
    parity_stability_check,
    path_from_function,
)

__version__ = "0.1.0"

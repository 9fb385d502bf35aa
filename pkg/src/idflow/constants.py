"""Constants and the numerics configuration shared by every module"""
from dataclasses import dataclass, replace
from math import sqrt

# Field kinds that can be sampled on a parameter grid
IDQS = 'idqs'
IDF = 'idf'
RIDF = 'ridf'
GAMMA = 'gamma'
STATE_IDQS = 'state_idqs'
FIELD_KINDS = (IDQS, IDF, RIDF, GAMMA, STATE_IDQS)
SIGNED_FIELDS = (IDF, RIDF, GAMMA)

# Mask reason codes for field cells and record flags
MASK_NONE = ''
MASK_POLE = 'pole'
MASK_BOUNDARY = 'boundary'
MASK_UNDEFINED = 'undefined'

# Record status flags
STATUS_OK = 'ok'
STATUS_POLE = 'pole'
STATUS_SINGULAR = 'singular'
STATUS_UNDEFINED = 'undefined'

# Defaults of the dissipative-channel figure: W = 3 lambda, shell radius sqrt(0.9)
DEFAULT_SPECTRAL_WIDTH = 1.0
DEFAULT_COUPLING = 3.0
FIGURE_RADIUS = sqrt(0.9)
DEFAULT_SNAPSHOTS = (0.02, 0.1, 0.5, 1.0)
DEFAULT_FIELDS = (IDQS, IDF, RIDF)
DEFAULT_RESOLUTION = 101
DEFAULT_T_MAX = 3.0
DEFAULT_STEPS = 3000


@dataclass(frozen=True)
class Numerics:
    """Tolerances and step defaults. Replace through configure_numerics, read through numerics()"""
    algebraic_tol: float = 1e-12
    spectral_tol: float = 1e-10
    trace_tol: float = 1e-10
    psd_tol: float = 1e-9
    kernel_threshold: float = 1e-12
    singular_threshold: float = 1e-10
    support_tol: float = 1e-8
    imaginary_tol: float = 1e-10
    fd_step: float = 1e-5
    half_step_tol: float = 1e-8
    trajectory_eig_tol: float = 1e-7
    trajectory_trace_tol: float = 1e-9
    pole_tol: float = 1e-12
    boundary_tol: float = 1e-9
    degenerate_tol: float = 1e-8
    mask_radius: float = 0.999
    backflow_threshold: float = 1e-10
    decomposition_tol: float = 1e-8
    max_dim: int = 16


_NUMERICS = Numerics()


def numerics() -> Numerics:
    """The active numerics configuration"""
    return _NUMERICS


def configure_numerics(**overrides) -> Numerics:
    """
    Replaces fields of the active numerics configuration
    :param overrides: Numerics field names and their new values
    :return: The new active configuration
    """
    global _NUMERICS  # pylint:disable=global-statement
    _NUMERICS = replace(_NUMERICS, **overrides)
    return _NUMERICS


def reset_numerics() -> Numerics:
    """Restores the default numerics configuration"""
    global _NUMERICS  # pylint:disable=global-statement
    _NUMERICS = Numerics()
    return _NUMERICS

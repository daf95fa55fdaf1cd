"""Multiscale wedge tests for the monotonicity and modes of multivariate densities."""
from .errors import (DataParseError, DegenerateScaleError, InsufficientDataError, InvalidInputError,
                     ModescopeError, ParameterError)
from .geometry import (Grid, ScaleParams, Wedge, WedgeLayout, WedgeScan, build_grid, default_mesh,
                       default_scales, direction_set, orthonormal_complement, scan_wedge,
                       signed_projected_distance, wedge_contains)
from .inference import (ModeDetection, ModeTestResult, MonotonicityMap, TheoryConstants, WedgeDecision,
                        critical_value, detect_modes, local_mode_test, monotonicity_map, theory_constants)
from .io import parse_points, read_results, write_results
from .kernels import backend_name, set_backend, use_backend
from .nullsim import NullConfig, NullQuantile, calibrate, simulate_null
from .render import render_map
from .statistics import beta, gamma_penalty, normalize, statistic_subsection, statistic_wedge
from .univariate import multiscale_statistic, spacing_statistic, univariate_quantile

__version__ = "1.0.0"

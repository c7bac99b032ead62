"""PMU placement, SVD-based transmission scheduling and TLS-GLRT change detection."""

__version__ = "0.1.0"

from .network import (PowerNetwork, build_incidence, dc_laplacian, load_case,
                      nominal_susceptance, parse_case, topological_connectivity)
from .electrical import electrical_connectivity, resistance_distance
from .placement import solve_placement, verify_coverage
from .scheduler import build_schedule, scheduling_submatrix, svd_ordering, truncate_schedule
from .detector import NoiseParams, MeasurementSet, chi2_threshold, glrt_statistic, glrt_test
from .pipeline import plan
from .simulation import SimConfig, monte_carlo_pd

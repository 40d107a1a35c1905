"""Piecewise smooth (Filippov) vector fields on the torus and the sphere."""

from .manifold import ManifoldModel, QuotientPoint, Sphere, Torus, quotient_distance, wrap
from .field import (
    PiecewiseField, RegionLabel, SigmaId, Side, SmoothField, Visibility, constant_field,
    decompose_sigma, find_pseudo_equilibria, find_tangencies, parity_report, trig_field,
)
from .flow import EventKind, IntegrationOptions, Regime, Trajectory, detect_fold_connection, integrate
from .maps import (
    NoReturn, NotFound, Section, SectionPoint, displacement_roots, find_p_star,
    first_return_crossing, half_return, periodicity_test,
)
from .classify import (
    ChaosRefused, catalog_limit_cycles, chaos_check, classify_decomposition, classify_regular,
    sphere_decomposition,
)
from .scenarios import PRESETS, get_scenario

__version__ = "0.1.0"

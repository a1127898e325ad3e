"""Tolerance and default settings shared across modules."""

from pydantic import BaseModel, Field


class Tolerances(BaseModel):
    """Central tolerance policy."""

    form_tol: float = Field(default=1e-10, gt=0)
    point_tol: float = Field(default=1e-12, gt=0)
    dedup_tol: float = Field(default=1e-9, gt=0)
    boundary_tol: float = Field(default=1e-12, gt=0)
    series_rel: float = Field(default=1e-16, gt=0)
    series_max_terms: int = Field(default=10_000, ge=1)
    quad_tol: float = Field(default=1e-10, gt=0)
    kernel_margin: float = Field(default=1e-8, gt=0)
    max_polar_radius: float = Field(default=40.0, gt=0)


TOL = Tolerances()

# Pfaff argument beyond which the series is considered too slow
PFAFF_MAX_ARG = 0.95
# Direct series radius on the positive side of the unit disk
SERIES_MAX_ARG = 0.95

# Finite-difference defaults for iterated derivatives
FD_STEP = 1e-2
FD_LEVELS = 3
MAX_KERNEL_DIMENSION = 4
# Pfaff fallback limit when the connection formula is degenerate
DEGENERATE_PFAFF_MAX_ARG = 0.995

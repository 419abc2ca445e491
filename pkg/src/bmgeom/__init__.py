"""Exact voxel Brunn-Minkowski geometry: sumsets, symmetrizations, deficits
and recovery of homothetic convex pairs from near-extremal grid sets."""

from .convex import (
    ConvexPolytope,
    HomothetyFit,
    homothety_align,
    hull,
    rasterize,
    rasterize_ball,
    resample,
    symmetric_difference_volume,
    tail_measure,
)
from .errors import (
    BMError,
    CapacityError,
    DegenerateError,
    DimensionError,
    EmptySetError,
    FormatError,
    NormalizationError,
    PreconditionRefused,
    SharpBoundViolation,
    StageError,
)
from .grid import (
    GridSet,
    StepFunction,
    column_counts,
    distribution,
    fiber,
    measure,
    project,
    refine,
    shear,
    superlevel,
    translate,
)
from .recover import (
    PipelineParams,
    RecoveryResult,
    interval_recover_1d,
    recover_convex_pair,
)
from .sumset import DeficitReport, combo_sum, deficit_additive, deficit_combo, minkowski_sum
from .symmetrize import SymmetrizationMode, natural, schwarz, steiner, symmetrize

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

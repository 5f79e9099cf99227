"""Neural hybrid system learning, abstraction, and CTL verification."""

from .abstraction import (
    Trace,
    TraceSet,
    TransitionSystem,
    build_cells,
    compute_transitions,
    export_dot,
    sample_traces,
)
from .ctl import CtlFormula, CtlSyntaxError, check, parse_ctl, sat_set
from .data import DataError, Dataset, WorkingZone, load_dataset, save_dataset, zone_from_data
from .elm import ElmNetwork, SingularSystemError, fit_output_weights, init_elm, mse, predict, predict_batch
from .geometry import Box, membership_matrix
from .hybrid import HybridModel, Region, SimResult, hybrid_mse, merge_and_learn
from .partition import PartitionSet, me_partition, select_bisection, shannon_entropy
from .reach import (
    Bounds,
    ReachPiece,
    ReachResult,
    affine_image_box,
    cell_successor_box,
    elm_output_box,
    reach_sequence,
    relu_image_box,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Bounds",
    "CtlFormula",
    "CtlSyntaxError",
    "DataError",
    "Dataset",
    "ElmNetwork",
    "HybridModel",
    "PartitionSet",
    "ReachPiece",
    "ReachResult",
    "Region",
    "SimResult",
    "SingularSystemError",
    "Trace",
    "TraceSet",
    "TransitionSystem",
    "WorkingZone",
    "affine_image_box",
    "build_cells",
    "cell_successor_box",
    "check",
    "compute_transitions",
    "elm_output_box",
    "export_dot",
    "fit_output_weights",
    "hybrid_mse",
    "init_elm",
    "load_dataset",
    "me_partition",
    "membership_matrix",
    "merge_and_learn",
    "mse",
    "parse_ctl",
    "predict",
    "predict_batch",
    "reach_sequence",
    "relu_image_box",
    "sample_traces",
    "sat_set",
    "save_dataset",
    "select_bisection",
    "shannon_entropy",
    "zone_from_data",
]

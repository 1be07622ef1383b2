"""Per-region dielectric loss budgeting for superconducting resonators.

Extracts the loss factors (or loss tangents) of individual material
interfaces and the bulk substrate from measured resonator quality
factors and simulated energy participation ratios, with Monte Carlo
confidence intervals, participation-matrix conditioning diagnostics,
device-set design search and simulated measurement campaigns.
"""

__version__ = "0.1.0"

from .dataset import Dataset, file_digest, load_dataset, write_dataset
from .design import DesignSearchResult, proportionality_report, search_min_condition
from .errors import NumericalError, ValidationError
from .model import (
    DeviceGeometry,
    EtchStyle,
    LossBasis,
    LossVector,
    ParticipationMatrix,
    QtlsDistribution,
    RegionKind,
    RegionSpec,
    convert_loss_vector,
    decompose_losses,
    default_region_set,
    loss_factor_from_tangent,
    q_tls_forward,
    q_tls_from_power_sweep,
    tangent_from_loss_factor,
)
from .simexp import SimExpConfig, WorstCaseCurve, run_simulated_experiment, sample_device_qs
from .solver import ConditionReport, LinearSystem, condition_number, least_squares, nnls_solve
from .uncertainty import (
    ExtractionResult,
    MeasurementSet,
    QPrediction,
    extract_mc,
    predict_q_mc,
    summarize,
)

__all__ = [
    "__version__",
    "ConditionReport",
    "Dataset",
    "DesignSearchResult",
    "DeviceGeometry",
    "EtchStyle",
    "ExtractionResult",
    "LinearSystem",
    "LossBasis",
    "LossVector",
    "MeasurementSet",
    "NumericalError",
    "ParticipationMatrix",
    "QPrediction",
    "QtlsDistribution",
    "RegionKind",
    "RegionSpec",
    "SimExpConfig",
    "ValidationError",
    "WorstCaseCurve",
    "condition_number",
    "convert_loss_vector",
    "decompose_losses",
    "default_region_set",
    "extract_mc",
    "file_digest",
    "least_squares",
    "load_dataset",
    "loss_factor_from_tangent",
    "nnls_solve",
    "predict_q_mc",
    "proportionality_report",
    "q_tls_forward",
    "q_tls_from_power_sweep",
    "run_simulated_experiment",
    "sample_device_qs",
    "search_min_condition",
    "summarize",
    "tangent_from_loss_factor",
    "write_dataset",
]

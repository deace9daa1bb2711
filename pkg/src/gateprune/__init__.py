"""Gate significance scoring and threshold pruning for ZZ feature maps."""

from .featuremap import BoundCircuit, FeatureMapSpec, active_qubits, build_zz_map, prune
from .gsi import GateMetrics, HardwareEstimatorConfig, SensitivityConfig, gsi_exact, gsi_hardware, gsi_range
from .pipeline import ScanConfig, ScanReport, balanced_score, rank_candidates, run_scan
from .simcore import Circuit, GateOp, NoiseSpec

__version__ = "0.1.0"

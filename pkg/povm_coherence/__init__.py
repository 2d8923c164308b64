from povm_coherence.blockcoh import MeasureParams, MeasureResult, block_measure
from povm_coherence.naimark import build_extension, embed
from povm_coherence.optim import SolverConfig
from povm_coherence.povmcoh import PovmMeasureRequest, evaluate, povm_measure
from povm_coherence.quantum import DensityMatrix, Povm, ProjectiveMeasurement


__all__ = [
    "DensityMatrix",
    "MeasureParams",
    "MeasureResult",
    "Povm",
    "PovmMeasureRequest",
    "ProjectiveMeasurement",
    "SolverConfig",
    "block_measure",
    "build_extension",
    "embed",
    "evaluate",
    "povm_measure",
]

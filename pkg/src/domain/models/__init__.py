"""
Domain Models
Core entities of weakly labeled identity dataset cleaning.
"""

from .face_record import FaceRecord
from .weak_dataset import WeakDataset, holdout_split
from .cleaned_dataset import CleanedDataset
from .embedding_model import EmbeddingModel, PcaTransform
from .identity_graph import CleanParams, ComponentRule, GroupDiagnostics, IdentityGraph
from .triplet import Triplet, TripletPolicy, TripletSet, TrainConfig, TrainResult, TrainStep
from .evaluation import (
    EvalConfig, PrecisionRecall, PrPoint, PurityCounts, VerificationPair, VerificationReport
)
from .clean_run import Calibration, CleanRun, IterationConfig
from .synth_config import SynthConfig, SynthMetadata
from .run_manifest import RunManifest

__all__ = [
    "FaceRecord",
    "WeakDataset", "holdout_split",
    "CleanedDataset",
    "EmbeddingModel", "PcaTransform",
    "CleanParams", "ComponentRule", "GroupDiagnostics", "IdentityGraph",
    "Triplet", "TripletPolicy", "TripletSet", "TrainConfig", "TrainResult", "TrainStep",
    "EvalConfig", "PrecisionRecall", "PrPoint", "PurityCounts", "VerificationPair", "VerificationReport",
    "Calibration", "CleanRun", "IterationConfig",
    "SynthConfig", "SynthMetadata",
    "RunManifest",
]

"""
Report repository.

Writes the plot-ready CSV reports (loss traces, PR curves), diagnostics
JSONL and the JSON reports (verification, calibration, metadata, manifests).
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence
import logging

import pandas as pd

from .base_repository import BaseRepository, PathLike
from ...domain.models.evaluation import PrPoint
from ...domain.models.identity_graph import GroupDiagnostics
from ...domain.models.run_manifest import RunManifest
from ...domain.models.triplet import TrainStep
from ...infrastructure.exceptions import StorageAccessException

LOSS_TRACE_COLUMNS = ["iteration", "batch_loss", "active_fraction", "violation"]
PR_CURVE_COLUMNS = ["threshold", "precision", "recall", "kept_count"]


class FileReportRepository(BaseRepository[RunManifest]):
    """File-based repository for run reports and manifests."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__(logger)

    def load(self, path: PathLike) -> RunManifest:
        return RunManifest.from_dict(self._load_json_file(path))

    def save(self, entity: RunManifest, path: PathLike) -> Path:
        return self._save_json_file(path, entity.to_dict())

    def save_timings(self, timings: Dict[str, float], path: PathLike) -> Path:
        return self._save_json_file(path, {stage: round(seconds, 6) for stage, seconds in timings.items()})

    def save_json(self, data: Any, path: PathLike) -> Path:
        return self._save_json_file(path, data)

    def save_loss_trace(self, trace: Sequence[TrainStep], path: PathLike) -> Path:
        return self._save_csv([step.to_dict() for step in trace], LOSS_TRACE_COLUMNS, path)

    def save_pr_curve(self, curve: Sequence[PrPoint], path: PathLike) -> Path:
        return self._save_csv([point.to_dict() for point in curve], PR_CURVE_COLUMNS, path)

    def save_diagnostics(self, diagnostics: Iterable[GroupDiagnostics], path: PathLike) -> Path:
        return self._save_jsonl_file(path, (row.to_dict() for row in diagnostics))

    def _save_csv(self, rows: List[Dict[str, Any]], columns: List[str], path: PathLike) -> Path:
        path = Path(path)
        frame = pd.DataFrame(rows, columns=columns)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            raise self._fail(StorageAccessException(f"Failed to write file: {e}",
                                                    path=str(path), operation="write"))
        self.logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path

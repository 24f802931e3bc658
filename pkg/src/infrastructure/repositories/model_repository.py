"""
Model repository for embedding models.

A model file is JSON: the head matrix with its shape header, the optional
frozen base and the optional PCA transform.
"""

from pathlib import Path
from typing import Optional
import logging

from .base_repository import BaseRepository, PathLike
from ...domain.models.embedding_model import EmbeddingModel
from ...infrastructure.exceptions import (
    DataValidationException,
    DimensionMismatchException,
    ParseException,
)


class FileModelRepository(BaseRepository[EmbeddingModel]):
    """File-based repository for embedding models."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__(logger)

    def load(self, path: PathLike) -> EmbeddingModel:
        data = self._load_json_file(path)
        try:
            model = EmbeddingModel.from_dict(data)
        except (DataValidationException, DimensionMismatchException) as e:
            raise self._fail(ParseException(f"Invalid model: {e}", path=str(path)))
        except (KeyError, TypeError, ValueError) as e:
            raise self._fail(ParseException(f"Invalid model: {e!r}", path=str(path)))
        self.logger.info(f"Loaded {model!r} from {path}")
        return model

    def save(self, entity: EmbeddingModel, path: PathLike) -> Path:
        written = self._save_json_file(path, entity.to_dict())
        self.logger.info(f"Saved {entity!r} to {written}")
        return written

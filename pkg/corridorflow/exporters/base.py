"""
Base exporter classes.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, TextIO

from ..utils.exceptions import ExportError


class Exporter(ABC):
    """Base exporter class."""

    @abstractmethod
    def export(self, payload, output_path: str) -> str:
        """Write payload to output_path and return the path written."""


class FileExporter(Exporter):
    """Base class for exporters writing one text file per call."""

    newline = ""

    def _ensure_directory(self, file_path: str) -> None:
        Path(file_path).parent.mkdir(parents=True, exist_ok=True)

    def _write(self, output_path: str, write: Callable[[TextIO], None]) -> str:
        """Create parent directories, open output_path and hand the stream to write."""
        try:
            self._ensure_directory(output_path)
            with open(output_path, "w", newline=self.newline, encoding="utf-8") as f:
                write(f)
        except OSError as e:
            raise ExportError(f"Failed to write {output_path}: {e}") from e
        return output_path

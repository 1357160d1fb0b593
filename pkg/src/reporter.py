"""
Report Generation Module

Renders tables and experiment reports as CSV or JSON and writes them
atomically.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

from . import __version__


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    target = Path(path)
    handle, temp_name = tempfile.mkstemp(dir=target.resolve().parent, prefix=f".{target.name}.",
                                         suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp_name, target)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


class ReportGenerator:
    """Generate CSV and JSON documents carrying the tool version and config echo."""

    def __init__(self, config_echo: Optional[Dict[str, Any]] = None, tool_version: str = __version__):
        """
        Initialize ReportGenerator.

        Args:
            config_echo: Run configuration recorded in every document
            tool_version: Version string recorded in every document
        """
        self.config_echo = config_echo or {}
        self.tool_version = tool_version

    def _metadata(self, extra: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        metadata = {"tool_version": self.tool_version, "config": self.config_echo}
        if extra:
            metadata.update(extra)
        return metadata

    def generate_csv_report(self, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                            metadata: Optional[Dict[str, Any]] = None,
                            output_file: Optional[str] = None) -> str:
        """
        Generate a CSV table with ``#`` header lines.

        Args:
            columns: Column names
            rows: Table rows
            metadata: Extra header entries (level, residuals, seed, ...)
            output_file: Optional file path to save report

        Returns:
            Report as string
        """
        buffer = io.StringIO()
        for key, value in sorted(self._metadata(metadata).items()):
            buffer.write(f"# {key}: {json.dumps(value, sort_keys=True, ensure_ascii=False)}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
        report = buffer.getvalue()

        if output_file:
            write_atomic(output_file, report)

        return report

    def generate_json_report(self, payload: Dict[str, Any], output_file: Optional[str] = None) -> str:
        """
        Generate a JSON document.

        Args:
            payload: Results to embed under "result"
            output_file: Optional file path to save report

        Returns:
            Report as JSON string
        """
        document = self._metadata({"result": payload})
        json_str = json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

        if output_file:
            write_atomic(output_file, json_str)

        return json_str


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)

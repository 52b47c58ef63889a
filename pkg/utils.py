# utils.py
"""
Utility functions for fracwell
Contains output stream handling, number formatting and the worker pool helpers
"""

from __future__ import annotations

import io
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import psutil

logger = logging.getLogger(__name__)


class FileUtils:
    """File and path utility functions"""

    @staticmethod
    def normalize_path(path):
        """Expand ~ and normalize separators; '-' stays '-' (stdout)"""
        if not path:
            return ""
        path_str = str(path).strip()
        if path_str == "-":
            return path_str
        return os.path.normpath(os.path.expanduser(path_str))

    @staticmethod
    @contextmanager
    def open_output(path):
        """Text stream for writing; '-' or empty means stdout"""
        normalized = FileUtils.normalize_path(path)
        if normalized in ("", "-"):
            yield sys.stdout
            return
        target = Path(normalized)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as handle:
            yield handle

    @staticmethod
    def write_text(path, text: str) -> bool:
        """Write text to a file; False (and a logged error) on failure"""
        try:
            with FileUtils.open_output(path) as handle:
                handle.write(text)
            return True
        except OSError as e:
            logger.error("Error writing %s: %s", path, e)
            return False

    @staticmethod
    def validate_path(path) -> bool:
        """True if the path names an existing file"""
        if not path or not str(path).strip():
            return False
        return os.path.isfile(FileUtils.normalize_path(path))


class FormatUtils:
    """Number formatting for result files"""

    @staticmethod
    def format_float(value) -> str:
        """17 significant digits; inf/nan spelled out"""
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value

    @staticmethod
    def format_value(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, int):
            return str(value)
        if isinstance(value, float):
            return FormatUtils.format_float(value)
        return str(value)

    @staticmethod
    def parse_value(text: str):
        """Inverse of format_value for CSV cells"""
        if text in ("true", "false"):
            return text == "true"
        try:
            return int(text)
        except ValueError:
            pass
        try:
            return float(text)
        except ValueError:
            return text

    @staticmethod
    def csv_text(rows, columns=None) -> str:
        """Header plus one line per row dict"""
        rows = list(rows)
        if columns is None:
            columns = list(rows[0].keys()) if rows else []
        buffer = io.StringIO()
        buffer.write(",".join(columns) + "\n")
        for row in rows:
            buffer.write(",".join(FormatUtils.format_value(row[c]) for c in columns) + "\n")
        return buffer.getvalue()


class ParallelUtils:
    """Worker pool helpers; results always come back in submission order"""

    @staticmethod
    def worker_count(requested=None, jobs: int = 1) -> int:
        """Requested count, else the number of physical cores, capped by the job count"""
        if requested:
            return max(1, min(int(requested), jobs))
        cores = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1
        return max(1, min(cores, jobs))

    @staticmethod
    def ordered_map(func, items, workers: int) -> list:
        items = list(items)
        if workers <= 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="fracwell") as pool:
            return list(pool.map(func, items))

# calibration_store.py
"""
Persistence for calibrated rate-function constants
Loads, saves and looks up one record per (alpha, m) in a JSON file under the cache directory
"""

import json
import logging
import threading
from pathlib import Path

from config import Paths, Settings
from levy import RateConstants

logger = logging.getLogger(__name__)


def record_key(alpha, m):
    """Stable text key for a parameter pair"""
    return f"alpha={float(alpha)!r},m={float(m)!r}"


class CalibrationStore:
    """Manages saved rate constants keyed by (alpha, m)"""

    def __init__(self, path=None):
        if path is None:
            Paths.ensure_cache_dir()
            path = Paths.calibration_file()
        self.config_file = Path(path)
        self._lock = threading.Lock()
        self.data = self.load()

    def load(self):
        """Load records from the calibration file"""
        try:
            if self.config_file.exists():
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                # Validate structure
                if isinstance(data, dict) and isinstance(data.get("records"), dict):
                    return data
                logger.warning("Invalid calibration file structure in %s, starting empty", self.config_file)
            return self._create_default()
        except (json.JSONDecodeError, OSError) as e:
            logger.warning("Error loading calibration file %s: %s. Starting empty.", self.config_file, e)
            return self._create_default()

    def _create_default(self):
        return {"version": Settings.VERSION, "records": {}}

    def save(self):
        """Save records to the calibration file"""
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.data, f, indent=2, sort_keys=True)
            return True
        except OSError as e:
            logger.error("Error saving calibration file %s: %s", self.config_file, e)
            return False

    def get(self, alpha, m):
        """Stored constants for (alpha, m), or None"""
        record = self.data["records"].get(record_key(alpha, m))
        if record is None:
            return None
        try:
            constants = RateConstants.from_dict(record)
        except (KeyError, TypeError, ValueError) as e:
            logger.warning("Ignoring malformed calibration record for alpha=%g, m=%g: %s", alpha, m, e)
            return None
        logger.info("calibration cache hit for alpha=%g, m=%g", alpha, m)
        return constants

    def put(self, constants):
        """Store constants and write the file"""
        with self._lock:
            self.data["records"][record_key(constants.alpha, constants.m)] = constants.to_dict()
            saved = self.save()
        if saved:
            logger.info("stored calibration for alpha=%g, m=%g in %s", constants.alpha, constants.m, self.config_file)
        return saved

    def remove(self, alpha, m):
        """Remove a record"""
        with self._lock:
            if self.data["records"].pop(record_key(alpha, m), None) is None:
                return False
            return self.save()

    def get_all(self):
        """All stored records as RateConstants"""
        out = []
        for record in self.data["records"].values():
            try:
                out.append(RateConstants.from_dict(record))
            except (KeyError, TypeError, ValueError):
                continue
        return out

    def clear(self):
        """Remove every record"""
        with self._lock:
            self.data = self._create_default()
            return self.save()

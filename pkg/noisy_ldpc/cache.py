"""
Content-addressed store for EXIT curves.

Entries live in memory and, when a directory is configured, as one JSON file per curve.
The random stream used to compute a curve derives from its key, so a curve is the same
whether it was computed now or loaded from disk.
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Union

import numpy as np
from packaging.version import InvalidVersion, Version

from .exit_chart import DEFAULT_GRID, ExitCurve, grid_digest, ncnd_curve, nvnd_curve
from .parallel import derive_rng

logger = logging.getLogger(__name__)

CACHE_FORMAT = "1.0"
CACHE_DIR_ENV = "NOISY_LDPC_CACHE_DIR"


@dataclass(frozen=True)
class CurveKey:
    """Everything a Monte-Carlo curve depends on."""

    kind: str
    degree: int
    sigma2_d: float
    snr_db: Optional[float]
    rate: Optional[float]
    grid_hash: str
    n_trials: int
    seed: int

    @property
    def digest(self) -> str:
        payload = json.dumps(
            {
                "kind": self.kind,
                "degree": self.degree,
                "sigma2_d": repr(float(self.sigma2_d)),
                "snr_db": None if self.snr_db is None else repr(float(self.snr_db)),
                "rate": None if self.rate is None else repr(float(self.rate)),
                "grid": self.grid_hash,
                "n_trials": self.n_trials,
                "seed": self.seed,
                "format": CACHE_FORMAT,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def rng(self) -> np.random.Generator:
        return derive_rng(self.seed, self.digest)


def resolve_cache_dir(
    flag: Optional[Union[str, Path]] = None, configured: Optional[Union[str, Path]] = None
) -> Optional[Path]:
    """Command-line flag, then configuration, then environment variable."""
    for candidate in (flag, configured, os.environ.get(CACHE_DIR_ENV)):
        if candidate:
            return Path(candidate)
    return None


def _compatible(version: str) -> bool:
    try:
        return Version(version).major == Version(CACHE_FORMAT).major
    except InvalidVersion:
        return False


class CurveCache:
    """Thread-safe memory cache, optionally backed by a directory."""

    def __init__(self, directory: Optional[Union[str, Path]] = None):
        self.directory = Path(directory) if directory else None
        self._memory: Dict[str, ExitCurve] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: CurveKey) -> Path:
        assert self.directory is not None
        return self.directory / f"{key.digest}.json"

    def get(self, key: CurveKey) -> Optional[ExitCurve]:
        with self._lock:
            curve = self._memory.get(key.digest)
        if curve is not None or self.directory is None:
            return curve

        path = self._path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            if not _compatible(str(entry.get("format", ""))):
                logger.warning(f"Ignoring cache entry {path.name} with format {entry.get('format')}")
                return None
            curve = ExitCurve.from_dict(entry["curve"])
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"Ignoring unreadable cache entry {path.name}: {e}")
            return None
        with self._lock:
            self._memory[key.digest] = curve
        return curve

    def put(self, key: CurveKey, curve: ExitCurve) -> None:
        with self._lock:
            self._memory[key.digest] = curve
        if self.directory is None:
            return
        entry = {"format": CACHE_FORMAT, "key": key.__dict__, "curve": curve.to_dict()}
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f)
            os.replace(tmp_name, self._path(key))
        except OSError:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def get_or_compute(
        self, key: CurveKey, compute: Callable[[np.random.Generator], ExitCurve]
    ) -> ExitCurve:
        curve = self.get(key)
        if curve is not None:
            self.hits += 1
            logger.debug(f"Cache hit for {key.kind} curve, degree {key.degree}")
            return curve
        self.misses += 1
        logger.debug(f"Cache miss for {key.kind} curve, degree {key.degree}; computing")
        curve = compute(key.rng())
        self.put(key, curve)
        return curve

    def variable_curve(
        self,
        dv: int,
        snr_db: float,
        rate: float,
        sigma2_d: float,
        grid: np.ndarray = DEFAULT_GRID,
        n_trials: int = 100_000,
        seed: int = 0,
    ) -> ExitCurve:
        key = CurveKey("variable", dv, sigma2_d, snr_db, rate, grid_digest(grid), n_trials, seed)
        return self.get_or_compute(
            key, lambda rng: nvnd_curve(dv, snr_db, rate, sigma2_d, grid, n_trials, rng)
        )

    def check_curve(
        self,
        dc: int,
        sigma2_d: float,
        grid: np.ndarray = DEFAULT_GRID,
        n_trials: int = 100_000,
        seed: int = 0,
    ) -> ExitCurve:
        key = CurveKey("check", dc, sigma2_d, None, None, grid_digest(grid), n_trials, seed)
        return self.get_or_compute(
            key, lambda rng: ncnd_curve(dc, sigma2_d, grid, n_trials, rng)
        )

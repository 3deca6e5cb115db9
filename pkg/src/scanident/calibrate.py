"""Monte Carlo critical values for the scan under pure noise.

Each replicate draws its noise from a stream keyed by ``(seed, index)``, so a
replicate's value does not depend on how the work was split across threads.
The critical value at level ``alpha`` is the ascending order statistic at
position ``ceil((1 - alpha) * reps)`` of the replicate maxima.
"""

from __future__ import annotations

import hashlib
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from filelock import FileLock

from .grid import ApproxSet, GridParams, build_grid
from .io import atomic_write_text
from .scan import PrefixAggregate, scan_both

CACHE_VERSION = 1
CACHE_HEADER = f"# scanident calibration cache v{CACHE_VERSION}"
CACHE_COLUMNS = ("key_hash", "n", "dim", "penalized", "alpha", "reps", "seed",
                 "c", "zeta", "min_length", "quantile", "created_at")
MIN_REPS = 100
DEFAULT_REPS = 10000
VALIDATION_REPS = 2000


class CalibrationError(ValueError):
    pass


def rng_stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for one replicate, derived from the seed and a
    position tuple. Philox is counter based, so streams never overlap."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def null_field(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n,) * dim)


@dataclass(frozen=True)
class CalibrationKey:
    n: int
    dim: int = 1
    penalized: bool = True
    alpha: float = 0.05
    reps: int = DEFAULT_REPS
    seed: int = 0
    c: float = 6.0
    zeta: float = 0.5
    min_length: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise CalibrationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.reps < MIN_REPS:
            raise CalibrationError(f"reps must be >= {MIN_REPS}, got {self.reps}")
        if not 0 <= self.seed < 2**64:
            raise CalibrationError("seed must fit in 64 unsigned bits")

    @property
    def grid_params(self) -> GridParams:
        return GridParams(self.n, self.dim, self.c, self.zeta, self.min_length)

    def _canonical(self, with_alpha=True, with_flag=True) -> str:
        parts = [f"n={self.n}", f"dim={self.dim}", f"reps={self.reps}",
                 f"seed={self.seed}", f"c={self.c!r}", f"zeta={self.zeta!r}",
                 f"min_length={self.min_length}"]
        if with_flag:
            parts.append(f"penalized={int(self.penalized)}")
        if with_alpha:
            parts.append(f"alpha={self.alpha!r}")
        return ";".join(parts)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self._canonical().encode()).hexdigest()[:16]

    @property
    def replicate_digest(self) -> str:
        # shared by every alpha and both statistics: same noise, same maxima
        raw = self._canonical(with_alpha=False, with_flag=False)
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


@dataclass
class CalibrationRecord:
    key: CalibrationKey
    quantile: float
    replicate_maxima: Optional[np.ndarray] = field(default=None, repr=False)
    created_at: str = ""
    status: str = "computed"  # computed | cached | degraded


def order_statistic_index(alpha: float, reps: int) -> int:
    """One-based position of the critical value among sorted maxima."""
    # guard against (1 - alpha) * reps landing a hair above an integer
    k = math.ceil((1.0 - alpha) * reps - 1e-9)
    return min(max(k, 1), reps)


def quantile_from_maxima(maxima, alpha: float) -> float:
    maxima = np.sort(np.asarray(maxima, dtype=np.float64))
    return float(maxima[order_statistic_index(alpha, len(maxima)) - 1])


def simulate_null_max(n: int, dim: int, penalized: bool, aset: ApproxSet,
                      replicate_index: int, seed: int) -> float:
    if aset.n != n or aset.dim != dim:
        raise CalibrationError("approximation set does not match (n, dim)")
    rng = rng_stream(seed, replicate_index)
    agg = PrefixAggregate.from_data(null_field(n, dim, rng))
    res = scan_both(agg, aset)
    return res.penalized.value if penalized else res.unpenalized.value


def _replicate_block(aset, seed, indices):
    pen = np.empty(len(indices))
    raw = np.empty(len(indices))
    for t, idx in enumerate(indices):
        rng = rng_stream(seed, idx)
        agg = PrefixAggregate.from_data(null_field(aset.n, aset.dim, rng))
        res = scan_both(agg, aset)
        pen[t] = res.penalized.value
        raw[t] = res.unpenalized.value
    return pen, raw


def map_blocks(fn, indices, threads: int = 1, block: int = 64):
    """Apply ``fn`` to consecutive blocks of ``indices`` and concatenate the
    tuple-of-array results in index order."""
    indices = np.asarray(indices, dtype=np.int64)
    blocks = [indices[i:i + block] for i in range(0, len(indices), block)]
    if threads <= 1 or len(blocks) <= 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, blocks))
    if not parts:
        return ()
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))


def null_maxima(aset: ApproxSet, reps: int, seed: int, threads: int = 1,
                start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Penalized and unpenalized null maxima for replicates ``start..start+reps``."""
    return map_blocks(lambda b: _replicate_block(aset, seed, b),
                      np.arange(start, start + reps), threads)


def default_cache_path() -> Path:
    env = os.environ.get("SCANIDENT_CACHE")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(Path.home(), ".cache")
    return Path(base) / "scanident" / "calibration.tsv"


class CalibrationCache:
    """Line-per-record TSV store with ``.npz`` sidecars for replicate maxima.

    Writers take a file lock and rewrite the file atomically; readers never
    lock.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else default_cache_path()

    @property
    def maxima_dir(self) -> Path:
        return self.path.with_name(self.path.name + ".maxima")

    def _lock(self):
        return FileLock(str(self.path) + ".lock")

    def _read_lines(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != CACHE_HEADER:
            raise CalibrationError(f"{self.path}: not a v{CACHE_VERSION} cache")
        rows = []
        for line in lines[2:]:
            if line.strip():
                rows.append(dict(zip(CACHE_COLUMNS, line.split("\t"))))
        return rows

    def records(self) -> list[CalibrationRecord]:
        return [_row_to_record(r) for r in self._read_lines()]

    def lookup(self, key: CalibrationKey) -> Optional[CalibrationRecord]:
        for row in self._read_lines():
            if row["key_hash"] == key.digest:
                rec = _row_to_record(row)
                if rec.key == key:
                    rec.status = "cached"
                    return rec
        return None

    def store(self, record: CalibrationRecord) -> None:
        with self._lock():
            rows = [r for r in self._read_lines() if r["key_hash"] != record.key.digest]
            rows.append(_record_to_row(record))
            body = [CACHE_HEADER, "\t".join(CACHE_COLUMNS)]
            body += ["\t".join(r[c] for c in CACHE_COLUMNS) for r in rows]
            atomic_write_text(self.path, "\n".join(body) + "\n")

    def load_maxima(self, key: CalibrationKey) -> Optional[np.ndarray]:
        path = self.maxima_dir / f"{key.replicate_digest}.npz"
        if not path.exists():
            return None
        with np.load(path) as data:
            return data["penalized" if key.penalized else "unpenalized"].copy()

    def store_maxima(self, key: CalibrationKey, pen: np.ndarray, raw: np.ndarray):
        self.maxima_dir.mkdir(parents=True, exist_ok=True)
        path = self.maxima_dir / f"{key.replicate_digest}.npz"
        tmp = path.with_name(path.name + ".tmp.npz")
        with self._lock():
            np.savez(tmp, penalized=pen, unpenalized=raw)
            os.replace(tmp, path)


def _record_to_row(rec: CalibrationRecord) -> dict:
    k = rec.key
    return {
        "key_hash": k.digest, "n": str(k.n), "dim": str(k.dim),
        "penalized": str(int(k.penalized)), "alpha": repr(k.alpha),
        "reps": str(k.reps), "seed": str(k.seed), "c": repr(k.c),
        "zeta": repr(k.zeta),
        "min_length": "none" if k.min_length is None else str(k.min_length),
        "quantile": repr(rec.quantile), "created_at": rec.created_at,
    }


def _row_to_record(row: dict) -> CalibrationRecord:
    key = CalibrationKey(
        n=int(row["n"]), dim=int(row["dim"]), penalized=row["penalized"] == "1",
        alpha=float(row["alpha"]), reps=int(row["reps"]), seed=int(row["seed"]),
        c=float(row["c"]), zeta=float(row["zeta"]),
        min_length=None if row["min_length"] == "none" else int(row["min_length"]),
    )
    return CalibrationRecord(key, float(row["quantile"]), created_at=row["created_at"],
                             status="cached")


def _with_flag(key: CalibrationKey, penalized: bool) -> CalibrationKey:
    return CalibrationKey(key.n, key.dim, penalized, key.alpha, key.reps, key.seed,
                          key.c, key.zeta, key.min_length)


def calibrate_both(key: CalibrationKey, cache: Optional[CalibrationCache] = None,
                   threads: int = 1, aset: Optional[ApproxSet] = None
                   ) -> tuple[CalibrationRecord, CalibrationRecord]:
    """Penalized and unpenalized records for ``key`` (its ``penalized`` flag
    is ignored), computed from one set of replicates.

    Cache hits are returned as-is. Stored replicate maxima are reused across
    ``alpha``. Cache failures fall back to computing without persisting and
    emit a warning; affected records carry ``status="degraded"``.
    """
    keys = (_with_flag(key, True), _with_flag(key, False))
    degraded = False
    hits: list = [None, None]
    maxima: list = [None, None]
    if cache is not None:
        try:
            hits = [cache.lookup(k) for k in keys]
            if all(h is not None for h in hits):
                return hits[0], hits[1]
            maxima = [cache.load_maxima(k) for k in keys]
        except (OSError, CalibrationError, ValueError, KeyError) as exc:
            warnings.warn(f"calibration cache unreadable ({exc}); not persisting")
            degraded = True
            hits, maxima = [None, None], [None, None]

    if any(m is None or len(m) != key.reps for m in maxima):
        if aset is None:
            aset = build_grid(key.grid_params)
        elif aset.params != key.grid_params:
            raise CalibrationError("approximation set does not match the key")
        maxima = list(null_maxima(aset, key.reps, key.seed, threads))
        if cache is not None and not degraded:
            try:
                cache.store_maxima(key, maxima[0], maxima[1])
            except OSError as exc:
                warnings.warn(f"could not store replicate maxima ({exc})")
                degraded = True

    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    out = []
    for k, hit, mx in zip(keys, hits, maxima):
        if hit is not None:
            out.append(hit)
            continue
        rec = CalibrationRecord(k, quantile_from_maxima(mx, k.alpha),
                                np.asarray(mx), stamp,
                                "degraded" if degraded else "computed")
        if cache is not None and not degraded:
            try:
                cache.store(rec)
            except (OSError, CalibrationError) as exc:
                warnings.warn(f"could not persist calibration ({exc})")
                rec.status = "degraded"
        out.append(rec)
    return out[0], out[1]


def calibrate(key: CalibrationKey, cache: Optional[CalibrationCache] = None,
              threads: int = 1, aset: Optional[ApproxSet] = None) -> CalibrationRecord:
    """Critical value for ``key``, from the cache when possible."""
    pen, raw = calibrate_both(key, cache, threads, aset)
    return pen if key.penalized else raw


def rejection_rate(maxima, threshold: float) -> float:
    """Fraction of replicates a scan with this threshold would flag."""
    maxima = np.asarray(maxima)
    return float(np.mean(maxima >= threshold))


def key_to_dict(key: CalibrationKey) -> dict:
    return asdict(key)

"""Frame-level emission lattices and the CTCE v1 file format.

An emission matrix holds T x V natural-log label probabilities produced
by an external acoustic model, one row per 20 ms frame by default.  The
on-disk format is bit-exact: magic "CTCE", little-endian u16 version,
u32 T, u32 V, then T*V little-endian float32 values in row major order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"CTCE"
VERSION = 1
DEFAULT_FRAME_DURATION = 0.02

_HEADER = struct.Struct("<4sHII")

# Tolerance for each row's log-sum-exp and for slightly positive
# log-probabilities; covers float32 round-off.
ROW_NORM_TOL = 1e-4


class EmissionFormatError(ValueError):
    """A CTCE file is structurally invalid or carries invalid values."""


@dataclass(frozen=True)
class EmissionMatrix:
    """Validated T x V lattice of natural-log probabilities (float32)."""

    log_probs: np.ndarray
    frame_duration: float = DEFAULT_FRAME_DURATION

    def __post_init__(self):
        arr = np.asarray(self.log_probs, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"log_probs must be 2-D, got shape {arr.shape}")
        t, v = arr.shape
        if t < 1 or v < 1:
            raise ValueError(f"need at least one frame and one label, got {t}x{v}")
        if np.isnan(arr).any():
            raise ValueError("log_probs contains NaN")
        if np.max(arr) > ROW_NORM_TOL:
            raise ValueError("log-probabilities must be <= 0 (up to tolerance)")
        row_mass = logsumexp_rows(arr.astype(np.float64))
        if np.max(np.abs(row_mass)) > ROW_NORM_TOL:
            worst = int(np.argmax(np.abs(row_mass)))
            raise ValueError(
                f"row {worst} is not a probability distribution "
                f"(logsumexp = {row_mass[worst]:+.6f})"
            )
        object.__setattr__(self, "log_probs", arr)

    @property
    def frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def labels(self) -> int:
        return self.log_probs.shape[1]

    @property
    def duration_s(self) -> float:
        return self.frames * self.frame_duration


def logsumexp_rows(arr: np.ndarray) -> np.ndarray:
    """Row-wise log(sum(exp(x))) with max-shift; -inf rows stay -inf."""
    m = np.max(arr, axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    out = safe + np.log(np.sum(np.exp(arr - safe[:, None]), axis=1))
    return np.where(np.isfinite(m), out, m)


def write_ctce(matrix: EmissionMatrix, path) -> None:
    payload = matrix.log_probs.astype("<f4").tobytes(order="C")
    header = _HEADER.pack(MAGIC, VERSION, matrix.frames, matrix.labels)
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_ctce(path, frame_duration: float = DEFAULT_FRAME_DURATION) -> EmissionMatrix:
    """Read a CTCE v1 file, rejecting wrong magic or version, truncated
    payloads and trailing bytes."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise EmissionFormatError(
            f"file too short for header: {len(data)} bytes"
        )
    magic, version, t, v = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise EmissionFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise EmissionFormatError(f"unsupported version {version}")
    if t < 1 or v < 1:
        raise EmissionFormatError(f"invalid dimensions {t}x{v}")
    expected = _HEADER.size + 4 * t * v
    if len(data) < expected:
        raise EmissionFormatError(
            f"truncated payload: {len(data)} bytes, expected {expected}"
        )
    if len(data) > expected:
        raise EmissionFormatError(
            f"{len(data) - expected} trailing bytes after payload"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(t, v)
    try:
        return EmissionMatrix(values.copy(), frame_duration=frame_duration)
    except ValueError as exc:
        raise EmissionFormatError(str(exc)) from exc

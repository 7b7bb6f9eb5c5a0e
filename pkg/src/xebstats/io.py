"""File formats and atomic writes.

PTPV binary: magic ``PTPV``, u16 LE version (1), u16 LE n, then 2**n f64 LE weights.
Probability text: ``n=<int>`` then one weight per line.
Sample text: ``n=<int>``, ``N=<int>``, then N bitstrings, most significant qubit first.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DimensionError, DomainError, XebStatsError
from .noise import Sample
from .probmodel import MAX_QUBITS, ProbabilityVector

MAGIC = b"PTPV"
VERSION = 1
HEADER = struct.Struct("<4sHH")

PathLike = Union[str, os.PathLike]


class FormatError(XebStatsError, ValueError):
    """Malformed input file."""


def atomic_write(path: PathLike, data: Union[bytes, str]) -> None:
    """Write via a temporary file in the target directory, then rename into place."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ptpv_bytes(pv: ProbabilityVector) -> bytes:
    return HEADER.pack(MAGIC, VERSION, pv.n) + pv.weights.astype("<f8").tobytes()


def write_ptpv(path: PathLike, pv: ProbabilityVector) -> None:
    atomic_write(path, ptpv_bytes(pv))


def read_ptpv(path: PathLike) -> ProbabilityVector:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) != HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, n = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: not a PTPV file")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported PTPV version {version}")
        if not 1 <= n <= MAX_QUBITS:
            raise DimensionError(f"{path}: qubit count {n} out of range")
        w = np.fromfile(fh, dtype="<f8", count=(1 << n) + 1)
    if w.size != 1 << n:
        raise FormatError(f"{path}: expected {1 << n} weights, found {w.size}")
    return ProbabilityVector(n, w.astype(np.float64))


def write_prob_text(path: PathLike, pv: ProbabilityVector) -> None:
    lines = [f"n={pv.n}"] + [repr(float(x)) for x in pv.weights]
    atomic_write(path, "\n".join(lines) + "\n")


def _header_int(line: str, key: str, path) -> int:
    line = line.strip()
    if not line.startswith(key + "="):
        raise FormatError(f"{path}: expected '{key}=<int>', got {line[:40]!r}")
    try:
        return int(line[len(key) + 1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad integer in {line[:40]!r}") from exc


def read_prob_text(path: PathLike) -> ProbabilityVector:
    with open(path) as fh:
        n = _header_int(fh.readline(), "n", path)
        w = np.loadtxt(fh, dtype=np.float64, ndmin=1)
    if w.size != 1 << n:
        raise FormatError(f"{path}: expected {1 << n} weights, found {w.size}")
    return ProbabilityVector(n, w)


def read_probs(path: PathLike) -> ProbabilityVector:
    """Read either probability format, sniffing the magic bytes."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return read_ptpv(path) if magic == MAGIC else read_prob_text(path)


def sample_text(sample: Sample) -> str:
    n = sample.n
    # bitstrings for every distinct index, then gathered in draw order
    idx, inv = np.unique(sample.draws, return_inverse=True)
    bits = ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8) + ord("0")
    strings = np.array([b.tobytes().decode() for b in bits])
    body = "\n".join(strings[inv].tolist())
    return f"n={n}\nN={sample.total}\n" + body + ("\n" if sample.total else "")


def write_sample(path: PathLike, sample: Sample) -> None:
    atomic_write(path, sample_text(sample))


def read_sample(path: PathLike, pv: ProbabilityVector = None, v: ProbabilityVector = None) -> Sample:
    """Read a sample file; if ``pv`` (and ``v``) are given, look up the drawn probabilities."""
    with open(path) as fh:
        n = _header_int(fh.readline(), "n", path)
        N = _header_int(fh.readline(), "N", path)
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != N:
        raise FormatError(f"{path}: header says N={N}, found {len(lines)} bitstrings")
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"{path}: qubit count {n} out of range")
    draws = np.empty(N, dtype=np.int64)
    for j, s in enumerate(lines):
        if len(s) != n or set(s) - {"0", "1"}:
            raise FormatError(f"{path}: line {j + 3} is not a {n}-bit string")
        draws[j] = int(s, 2)
    for vec in (pv, v):
        if vec is not None and vec.n != n:
            raise DimensionError(f"{path}: sample has n={n}, probability file has n={vec.n}")
    return Sample(
        n,
        draws,
        None if pv is None else pv.weights[draws],
        None if v is None else v.weights[draws],
    )


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def read_tau(path: PathLike, M: int) -> np.ndarray:
    """Acceptance probabilities as text, one value per line in index order."""
    tau = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if tau.size != M:
        raise DimensionError(f"{path}: expected {M} acceptance probabilities, found {tau.size}")
    if np.any(tau < 0) or np.any(tau > 1):
        raise DomainError(f"{path}: acceptance probabilities must lie in [0, 1]")
    return tau

"""Feature, label, split, and kernel-table file formats.

Feature matrices travel either as CSV (one row per node) or in the ATPF
binary container: magic ``ATPF``, u32 version, u64 n, u64 f, then n*f
little-endian float64 values row-major.  All writers format floats with
%.17g so artifacts are byte-stable and round-trip exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .encoding import KernelCoefficients
from .errors import ParseError, ValidationError

__all__ = [
    "ATPF_MAGIC",
    "load_features",
    "save_features_atpf",
    "save_features_csv",
    "load_labels",
    "save_labels",
    "load_split",
    "save_split",
    "load_depths",
    "save_kernel_csv",
    "load_kernel_csv",
]

ATPF_MAGIC = b"ATPF"
_ATPF_HEADER = struct.Struct("<4sIQQ")


def load_features(path) -> np.ndarray:
    """Load a feature matrix, sniffing ATPF binary vs CSV by magic bytes."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"features file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == ATPF_MAGIC:
        return _load_atpf(path)
    return _load_csv(path)


def _load_atpf(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _ATPF_HEADER.size:
        raise ParseError(f"{path}: truncated ATPF header")
    magic, version, n, f = _ATPF_HEADER.unpack_from(raw)
    if magic != ATPF_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise ParseError(f"{path}: unsupported ATPF version {version}")
    expected = _ATPF_HEADER.size + n * f * 8
    if len(raw) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_ATPF_HEADER.size).reshape(n, f)
    x = np.ascontiguousarray(data, dtype=np.float64)
    _check_finite(x, path)
    return x


def _load_csv(path: Path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split(",")
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise ParseError(f"{path}: non-numeric feature value", line=lineno) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}: ragged row width", line=lineno)
            rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: empty feature matrix")
    x = np.asarray(rows, dtype=np.float64)
    _check_finite(x, path)
    return x


def _check_finite(x: np.ndarray, path) -> None:
    if not np.isfinite(x).all():
        raise ValidationError(f"{path}: features must be finite (no NaN/Inf)")


def save_features_atpf(x: np.ndarray, path) -> None:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("feature matrix must be 2-D")
    header = _ATPF_HEADER.pack(ATPF_MAGIC, 1, x.shape[0], x.shape[1])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(x.astype("<f8").tobytes())


def save_features_csv(x: np.ndarray, path) -> None:
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in x:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_labels(path, n_hint: int | None = None) -> np.ndarray:
    """One integer per line; -1 marks an unlabeled node."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"labels file not found: {path}")
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            try:
                values.append(int(body))
            except ValueError:
                raise ParseError(f"{path}: non-integer label", line=lineno) from None
    labels = np.asarray(values, dtype=np.int64)
    if len(labels) and labels.min() < -1:
        raise ValidationError(f"{path}: labels must be >= -1")
    if n_hint is not None and len(labels) != n_hint:
        raise ValidationError(f"{path}: expected {n_hint} labels, found {len(labels)}")
    return labels


def save_labels(labels: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(labels, dtype=np.int64):
            fh.write(f"{v}\n")


def load_split(path) -> dict[str, np.ndarray]:
    """Three lines, each ``<name> id id ...`` with name in train/val/test."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"split file not found: {path}")
    out = {"train": np.zeros(0, dtype=np.int64), "val": np.zeros(0, dtype=np.int64),
           "test": np.zeros(0, dtype=np.int64)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split()
            name = parts[0]
            if name not in out:
                raise ParseError(f"{path}: unknown split group {name!r}", line=lineno)
            try:
                out[name] = np.asarray([int(p) for p in parts[1:]], dtype=np.int64)
            except ValueError:
                raise ParseError(f"{path}: non-integer node id", line=lineno) from None
    return out


def save_split(split: dict[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in ("train", "val", "test"):
            ids = " ".join(str(int(i)) for i in split.get(name, []))
            fh.write(f"{name} {ids}".rstrip() + "\n")


def load_depths(path, n: int) -> np.ndarray:
    """One integer depth per line, length must match the node count."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"depths file not found: {path}")
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            try:
                values.append(int(body))
            except ValueError:
                raise ParseError(f"{path}: non-integer depth", line=lineno) from None
    depths = np.asarray(values, dtype=np.int64)
    if len(depths) != n:
        raise ValidationError(f"{path}: expected {n} depths, found {len(depths)}")
    return depths


def save_kernel_csv(kernel: KernelCoefficients, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id,r_dg,r_ev,r_cu,r_tilde\n")
        for i in range(len(kernel.r_tilde)):
            fh.write(
                f"{i},{kernel.r_dg[i]:.17g},{kernel.r_ev[i]:.17g},"
                f"{kernel.r_cu[i]:.17g},{kernel.r_tilde[i]:.17g}\n"
            )


def load_kernel_csv(path) -> KernelCoefficients:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"kernel file not found: {path}")
    cols = {"r_dg": [], "r_ev": [], "r_cu": [], "r_tilde": []}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != ["node_id", "r_dg", "r_ev", "r_cu", "r_tilde"]:
            raise ParseError(f"{path}: unexpected kernel CSV header", line=1)
        for lineno, line in enumerate(fh, start=2):
            body = line.strip()
            if not body:
                continue
            parts = body.split(",")
            if len(parts) != 5:
                raise ParseError(f"{path}: expected 5 columns", line=lineno)
            for name, raw in zip(("r_dg", "r_ev", "r_cu", "r_tilde"), parts[1:]):
                cols[name].append(float(raw))
    summed = np.asarray(cols["r_dg"]) + np.asarray(cols["r_ev"]) + np.asarray(cols["r_cu"])
    r_tilde = np.asarray(cols["r_tilde"])
    # recover the scale the file was written with; fall back to 1 when the
    # sum is all-zero (then r_tilde is too, and any c_norm reproduces it)
    nz = summed != 0
    c_norm = float((r_tilde[nz] / summed[nz]).max()) if nz.any() else 1.0
    c_norm = min(max(c_norm, np.nextafter(0, 1)), 1.0)
    return KernelCoefficients(
        r_dg=np.asarray(cols["r_dg"]),
        r_ev=np.asarray(cols["r_ev"]),
        r_cu=np.asarray(cols["r_cu"]),
        c_norm=c_norm,
        r_tilde=r_tilde,
    )

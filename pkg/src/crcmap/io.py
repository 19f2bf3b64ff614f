"""Persistence: binary score containers, CSV, structured reports, splitting.

Container layout (all integers little-endian)::

    magic     4 bytes   b"CRS1" (scores) or b"CRZ1" (zone maps)
    version   uint16    1
    n_images  uint32
    height    uint32
    width     uint32
    then per image:
        image_id  uint32
        scores    float32[height * width]   row-major
        labels    int8[height * width]      row-major

Zone containers use the same layout with the label grid replaced by zone
codes (0 SAFE, 1 MONITOR, 2 EVACUATE, -1 no-data).
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io as _stdio
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, BinaryIO, Union

import numpy as np

from .domain import CalibrationResult, ScoreMapSet, ZoneThresholds, check_labels, check_scores
from .errors import (
    BadField,
    BadHeader,
    BadMagic,
    BadVersion,
    EmptyInput,
    ScoreOutOfRange,
    TruncatedPayload,
    ValidationError,
)

SCORE_MAGIC = b"CRS1"
ZONE_MAGIC = b"CRZ1"
VERSION = 1
HEADER = struct.Struct("<4sHIII")
CSV_HEADER = ["image_id", "row", "col", "score", "label"]

PathOrFile = Union[str, os.PathLike, BinaryIO]


def _record_dtype(h: int, w: int) -> np.dtype:
    return np.dtype([("image_id", "<u4"), ("scores", "<f4", (h * w,)), ("labels", "i1", (h * w,))])


def _encode(magic: bytes, ids, scores, codes) -> bytes:
    n, h, w = scores.shape
    rec = np.empty(n, dtype=_record_dtype(h, w))
    rec["image_id"] = ids
    rec["scores"] = scores.reshape(n, h * w)
    rec["labels"] = codes.reshape(n, h * w)
    return HEADER.pack(magic, VERSION, n, h, w) + rec.tobytes()


def _write_bytes(data: bytes, destination: PathOrFile) -> int:
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def _read_bytes(source: PathOrFile) -> bytes:
    if hasattr(source, "read"):
        return source.read()
    with open(source, "rb") as fh:
        return fh.read()


def _decode(data: bytes, magic: bytes):
    if len(data) < HEADER.size:
        raise TruncatedPayload(f"{len(data)} bytes is shorter than the {HEADER.size}-byte header")
    got, version, n, h, w = HEADER.unpack_from(data)
    if got != magic:
        raise BadMagic(f"expected magic {magic!r}, found {got!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported container version {version}")
    dt = _record_dtype(h, w)
    expected = HEADER.size + n * dt.itemsize
    if len(data) < expected:
        raise TruncatedPayload(f"payload holds {len(data)} bytes, header declares {expected}")
    if len(data) > expected:
        raise BadHeader(f"{len(data) - expected} trailing bytes after declared payload")
    rec = np.frombuffer(data, dtype=dt, offset=HEADER.size, count=n)
    ids = rec["image_id"].astype(np.uint32)
    scores = rec["scores"].reshape(n, h, w).astype(np.float32)
    codes = rec["labels"].reshape(n, h, w).astype(np.int8)
    return ids, scores, codes


def write_container(scores: ScoreMapSet, destination: PathOrFile) -> int:
    """Write a score container; returns the number of bytes written."""
    if len(scores) == 0:
        raise EmptyInput("cannot write an empty set")
    data = _encode(SCORE_MAGIC, scores.image_ids, scores.scores, scores.labels)
    return _write_bytes(data, destination)


def read_container(source: PathOrFile) -> ScoreMapSet:
    ids, scores, labels = _decode(_read_bytes(source), SCORE_MAGIC)
    if ids.size == 0:
        raise EmptyInput("container holds no images")
    if np.isnan(scores).any():
        raise ScoreOutOfRange("NaN score in container")
    check_scores(scores)
    check_labels(labels)
    return ScoreMapSet(ids, scores, labels)


def write_zone_container(scores: ScoreMapSet, codes: np.ndarray, destination: PathOrFile) -> int:
    codes = np.asarray(codes, dtype=np.int8).reshape(scores.scores.shape)
    if len(scores) == 0:
        raise EmptyInput("cannot write an empty set")
    return _write_bytes(_encode(ZONE_MAGIC, scores.image_ids, scores.scores, codes), destination)


def read_zone_container(source: PathOrFile) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (image_ids, scores, zone codes)."""
    ids, scores, codes = _decode(_read_bytes(source), ZONE_MAGIC)
    if not np.isin(codes, (-1, 0, 1, 2)).all():
        raise ValidationError("zone codes must be in {-1, 0, 1, 2}")
    return ids, scores, codes


# ------------------------------------------------------------------ CSV ---


def write_csv(scores: ScoreMapSet, destination) -> None:
    """Every cell, no-data included, so re-import reproduces the grid size."""
    n, h, w = scores.scores.shape
    rows, cols = np.divmod(np.arange(h * w), w)
    own = not hasattr(destination, "write")
    fh = open(destination, "w", newline="") if own else destination
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for k in range(n):
            iid = int(scores.image_ids[k])
            s = scores.scores[k].reshape(-1).tolist()
            lab = scores.labels[k].reshape(-1).tolist()
            out.writerows(
                (iid, int(r), int(c), repr(v), int(y)) for r, c, v, y in zip(rows, cols, s, lab)
            )
    finally:
        if own:
            fh.close()


def _parse_int(text: str, line: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise BadField(f"line {line}: {name}={text!r} is not an integer") from None


def read_csv(source) -> ScoreMapSet:
    own = not hasattr(source, "read")
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != CSV_HEADER:
            raise BadHeader(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")
        cells = {}
        order = []
        max_r = max_c = -1
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise BadField(f"line {line}: expected 5 fields, got {len(row)}")
            iid = _parse_int(row[0], line, "image_id")
            r = _parse_int(row[1], line, "row")
            c = _parse_int(row[2], line, "col")
            try:
                score = float(row[3])
            except ValueError:
                raise BadField(f"line {line}: score={row[3]!r} is not a number") from None
            label = _parse_int(row[4], line, "label")
            if r < 0 or c < 0 or not (0 <= iid < 2**32):
                raise BadField(f"line {line}: negative index or image_id out of range")
            if not (0.0 <= score <= 1.0):
                raise ScoreOutOfRange(f"line {line}: score {score!r} outside [0, 1]")
            if label not in (-1, 0, 1):
                check_labels(np.array([label]))
            if iid not in cells:
                cells[iid] = {}
                order.append(iid)
            if (r, c) in cells[iid]:
                raise BadField(f"line {line}: duplicate cell ({iid}, {r}, {c})")
            cells[iid][(r, c)] = (score, label)
            max_r, max_c = max(max_r, r), max(max_c, c)
    finally:
        if own:
            fh.close()
    if not order:
        raise EmptyInput("CSV holds no pixels")
    h, w = max_r + 1, max_c + 1
    scores = np.zeros((len(order), h, w), dtype=np.float32)
    labels = np.full((len(order), h, w), -1, dtype=np.int8)
    for k, iid in enumerate(order):
        for (r, c), (s, y) in cells[iid].items():
            scores[k, r, c] = s
            labels[k, r, c] = y
    return ScoreMapSet(order, scores, labels)


def write_sweep_csv(rows, destination) -> None:
    own = not hasattr(destination, "write")
    fh = open(destination, "w", newline="") if own else destination
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["lambda", "fnr", "set_size"])
        out.writerows((repr(float(a)), repr(float(b)), repr(float(c))) for a, b, c in rows)
    finally:
        if own:
            fh.close()


# -------------------------------------------------------------- splitting ---


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 42
    ratios: tuple = (0.70, 0.15, 0.15)

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratios)
        if len(r) != 3 or any(x < 0 for x in r) or abs(sum(r) - 1.0) > 1e-9:
            raise ValidationError(f"ratios must be three nonnegative reals summing to 1, got {r}")
        if not (0 <= self.seed < 2**64):
            raise ValidationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "ratios", r)


def split_sizes(n: int, ratios) -> tuple[int, int, int]:
    """Floor of cumulative boundaries; the first partition takes the remainder."""
    cum = np.cumsum(ratios)
    b1 = math.floor(cum[0] * n + 1e-9)
    b2 = math.floor(cum[1] * n + 1e-9)
    second = b2 - b1
    third = n - b2 if ratios[2] > 0 else 0
    return n - second - third, second, third


def split(scores: ScoreMapSet, spec: SplitSpec) -> tuple[ScoreMapSet, ...]:
    """Seeded permutation of whole images, cut into three partitions.

    Uses numpy's PCG64 generator seeded with ``spec.seed``. Empty partitions
    are returned as ``None``.
    """
    n = len(scores)
    if n == 0:
        raise EmptyInput("cannot split an empty set")
    perm = np.random.default_rng(spec.seed).permutation(n)
    a, b, _ = split_sizes(n, spec.ratios)
    parts = (perm[:a], perm[a : a + b], perm[a + b :])
    return tuple(scores.subset(np.sort(p)) if p.size else None for p in parts)


# ------------------------------------------------------ structured reports ---


def to_tree(obj: Any) -> Any:
    """Convert dataclasses, enums and numpy scalars into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_tree(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_tree(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return to_tree(obj.tolist())
    return obj


def dumps_tree(tree: Any) -> str:
    # json writes floats with repr(), which round-trips exactly
    return json.dumps(to_tree(tree), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_tree(tree: Any, destination) -> None:
    Path(destination).write_text(dumps_tree(tree))


def read_tree(source) -> Any:
    try:
        return json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise BadField(f"{source}: not a valid report tree ({exc})") from None


def calibration_from_tree(tree: dict) -> CalibrationResult:
    node = tree.get("calibration", tree)
    try:
        return CalibrationResult(**{f.name: node[f.name] for f in dataclasses.fields(CalibrationResult)})
    except KeyError as exc:
        raise BadField(f"threshold file lacks field {exc}") from None


def zones_from_tree(tree: dict) -> ZoneThresholds:
    node = tree.get("zones", tree)
    kwargs = {}
    for f in dataclasses.fields(ZoneThresholds):
        if f.name in node:
            v = node[f.name]
            kwargs[f.name] = float("nan") if v is None else v
        elif f.default is dataclasses.MISSING:
            raise BadField(f"zones file lacks field {f.name!r}")
    return ZoneThresholds(**kwargs)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def bytes_digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def container_bytes(scores: ScoreMapSet) -> bytes:
    buf = _stdio.BytesIO()
    write_container(scores, buf)
    return buf.getvalue()

"""File formats: binary PGM images and JSON Lines correspondences."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import FileFormat
from .gcpe import CorrespondenceSet

_PGM_HEADER = re.compile(rb"^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def write_pgm(path, image: np.ndarray) -> None:
    """Write a P5 PGM; uint8 images use maxval 255, anything else 16-bit big-endian."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images must be 2D")
    h, w = image.shape
    if image.dtype == np.uint8:
        maxval, payload = 255, image.tobytes()
    else:
        data = image.astype(">u2")
        maxval, payload = 65535, data.tobytes()
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(payload)


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    match = _PGM_HEADER.match(raw)
    if match is None:
        raise FileFormat(f"{path}: not a binary (P5) PGM")
    w, h, maxval = (int(g) for g in match.groups())
    if not 0 < maxval < 65536:
        raise FileFormat(f"{path}: invalid maxval {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    body = raw[match.end():]
    need = w * h * dtype.itemsize
    if len(body) < need:
        raise FileFormat(f"{path}: truncated pixel data ({len(body)} < {need} bytes)")
    return np.frombuffer(body[:need], dtype=dtype).reshape(h, w).astype(np.uint16 if maxval > 255 else np.uint8)


def read_depth_pgm(path) -> np.ndarray:
    """Millimetre-scaled PGM depth to metres (0 stays 0, the invalid sentinel)."""
    return read_pgm(path).astype(np.float64) / 1000.0


def write_depth_pgm(path, depth_m: np.ndarray) -> None:
    mm = np.clip(np.rint(np.asarray(depth_m) * 1000.0), 0, 65535).astype(np.uint16)
    write_pgm(path, mm)


def read_correspondences(path, m: int | None = None) -> CorrespondenceSet:
    """Parse JSONL lines ``{"pa": [x, y, z], "pb": [x, y, z], "confidence": c}``."""
    pa, pb, conf = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                a = [float(x) for x in rec["pa"]]
                b = [float(x) for x in rec["pb"]]
                c = float(rec.get("confidence", 1.0))
            except (ValueError, KeyError, TypeError) as exc:
                raise FileFormat(f"{path}:{lineno}: {exc}") from exc
            if len(a) != 3 or len(b) != 3:
                raise FileFormat(f"{path}:{lineno}: points must have three coordinates")
            if not 0.0 <= c <= 1.0:
                raise FileFormat(f"{path}:{lineno}: confidence {c} outside [0, 1]")
            pa.append(a)
            pb.append(b)
            conf.append(c)
    if not pa:
        return CorrespondenceSet.empty(m)
    try:
        return CorrespondenceSet(pa, pb, conf, m=m)
    except ValueError as exc:
        raise FileFormat(f"{path}: {exc}") from exc


def write_correspondences(path, corrs: CorrespondenceSet) -> None:
    with open(path, "w") as fh:
        for c in corrs:
            fh.write(json.dumps({"pa": list(c.pa), "pb": list(c.pb), "confidence": c.confidence}) + "\n")

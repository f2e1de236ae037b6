"""Grayscale image persistence: portable graymap (PGM) and CSV matrices."""

import re
from pathlib import Path

import numpy as np

from ..space import UsageError


def write_pgm(path, image: np.ndarray, maxval: int = 255) -> None:
    """Write a 2-D array as a binary PGM, 8-bit or 16-bit by ``maxval``."""
    if maxval not in (255, 65535):
        raise UsageError("maxval must be 255 or 65535")
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise UsageError("PGM output needs a 2-D array")
    clipped = np.clip(np.rint(img), 0, maxval)
    data = clipped.astype(">u2" if maxval == 65535 else np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit or 16-bit PGM (binary P5 or ASCII P2) as a float array."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P5", b"P2"):
        raise UsageError("not a PGM file")
    binary = raw[:2] == b"P5"
    # Header: magic, width, height, maxval, with '#' comments allowed.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        m = re.match(rb"\s*(?:#[^\n]*\n)*\s*(\S+)", raw[pos:])
        if not m:
            raise UsageError("truncated PGM header")
        tokens.append(m.group(1))
        pos += m.end()
    width, height, maxval = (int(t) for t in tokens)
    if binary:
        pos += 1  # single whitespace byte after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        count = width * height
        img = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    else:
        img = np.array(raw[pos:].split(), dtype=float)
        if img.size != width * height:
            raise UsageError("ASCII PGM pixel count mismatch")
    return img.astype(float).reshape(height, width)


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(matrix, dtype=float)),
               delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))

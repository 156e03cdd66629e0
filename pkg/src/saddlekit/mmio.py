"""Coordinate-format ("Matrix Market" style) text I/O, 1-based indices."""

from __future__ import annotations

import numpy as np

HEADER = "%%MatrixMarket matrix coordinate real general"


def write_coordinate(path, A) -> None:
    """Write a dense matrix as a coordinate file (explicit nonzeros only)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    rows, cols = A.shape
    ii, jj = np.nonzero(A)
    with open(path, "w") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"{rows} {cols} {len(ii)}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i + 1} {j + 1} {float(A[i, j])!r}\n")


def write_vector(path, v) -> None:
    """Write a vector as an n-by-1 coordinate file."""
    v = np.asarray(v, dtype=float)
    write_coordinate(path, v.reshape(-1, 1))


def read_coordinate(path) -> np.ndarray:
    """Read a coordinate file written by :func:`write_coordinate`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise ValueError(f"unsupported header: {header!r}")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        rows, cols, nnz = (int(t) for t in line.split())
        A = np.zeros((rows, cols))
        for _ in range(nnz):
            i, j, val = fh.readline().split()
            A[int(i) - 1, int(j) - 1] = float(val)
    return A


def read_vector(path) -> np.ndarray:
    return read_coordinate(path).ravel()

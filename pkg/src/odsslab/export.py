"""CSV writers shared by the modem, baseline and harness code."""

import csv

import numpy as np


def write_matrix_csv(path, M, kind: str = "complex", floor_db: float = -300.0) -> None:
    """Write a matrix as long-format CSV.

    ``kind="complex"`` writes ``row,col,re,im``; ``kind="db"`` writes
    ``row,col,mag_db`` with magnitudes in dB relative to the largest entry.
    """
    M = np.asarray(M)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        if kind == "complex":
            w.writerow(["row", "col", "re", "im"])
            for (i, j), v in np.ndenumerate(M):
                w.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])
        elif kind == "db":
            w.writerow(["row", "col", "mag_db"])
            for (i, j), v in np.ndenumerate(magnitude_db(M, floor_db)):
                w.writerow([i, j, f"{v:.6f}"])
        else:
            raise ValueError("kind must be 'complex' or 'db'")


def magnitude_db(M, floor_db: float = -300.0) -> np.ndarray:
    """``20 log10 |M| / max |M|`` clipped at ``floor_db``."""
    a = np.abs(np.asarray(M))
    peak = a.max() if a.size else 0.0
    if peak == 0:
        return np.full(a.shape, floor_db)
    with np.errstate(divide="ignore"):
        out = 20 * np.log10(a / peak)
    return np.maximum(out, floor_db)


def read_matrix_csv(path) -> np.ndarray:
    """Inverse of ``write_matrix_csv(kind="complex")``."""
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    n = max(int(r["row"]) for r in rows) + 1
    m = max(int(r["col"]) for r in rows) + 1
    M = np.zeros((n, m), dtype=complex)
    for r in rows:
        M[int(r["row"]), int(r["col"])] = float(r["re"]) + 1j * float(r["im"])
    return M

"""Small dense linear-algebra helpers shared across the package."""

from __future__ import annotations

import numpy as np


def vec(mat: np.ndarray) -> np.ndarray:
    """Stack the columns of ``mat`` into a vector (column-major vec)."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`vec` for the given (rows, cols) shape."""
    return np.asarray(v).reshape(shape, order="F")


def psd_sqrt(mat: np.ndarray, *, clip: float = -1e-10) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigendecomposition.

    Eigenvalues in [clip, 0) are treated as rounding noise and clipped to
    zero; anything below ``clip`` raises ValueError.
    """
    sym = 0.5 * (mat + mat.T)
    w, v = np.linalg.eigh(sym)
    if w.min(initial=0.0) < clip:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def sym_gap(mat: np.ndarray) -> float:
    """Max-abs deviation of ``mat`` from its transpose."""
    return float(np.abs(mat - mat.T).max(initial=0.0))

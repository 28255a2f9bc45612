"""Attacker-side identification of a one-step linear operator from snapshots."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidInputError

DEFAULT_SVD_TOL = 1e-10


class SnapshotBuffer:
    """Rolling window of eavesdropped stacked states.

    Holds at most width+1 columns; a full buffer yields the shifted data pair
    X (columns 1..w) and X+ (columns 2..w+1). Single-writer.
    """

    def __init__(self, width, dim):
        if width < 1:
            raise InvalidInputError(f"width must be >= 1, got {width}")
        if dim < 1:
            raise InvalidInputError(f"dim must be >= 1, got {dim}")
        self.width = int(width)
        self.dim = int(dim)
        self._cols = deque(maxlen=self.width + 1)

    def push(self, x):
        """Append one state column, evicting the oldest when over capacity."""
        x = np.asarray(x, float)
        if x.shape != (self.dim,):
            raise InvalidInputError(f"column length {x.shape} != {self.dim}")
        self._cols.append(x.copy())

    def __len__(self):
        return len(self._cols)

    @property
    def is_full(self):
        return len(self._cols) == self.width + 1

    @property
    def can_fit(self):
        return len(self._cols) >= 2

    @property
    def X(self):
        """dim x (n-1) matrix of all but the newest column."""
        cols = list(self._cols)
        return np.column_stack(cols[:-1]) if len(cols) >= 2 else np.zeros((self.dim, 0))

    @property
    def X_plus(self):
        """dim x (n-1) matrix of all but the oldest column."""
        cols = list(self._cols)
        return np.column_stack(cols[1:]) if len(cols) >= 2 else np.zeros((self.dim, 0))


@dataclass(frozen=True)
class DmdModel:
    """Least-squares one-step operator with its fit diagnostics."""

    K: np.ndarray
    residual: float
    rank_used: int

    def predict(self, x):
        return predict(self, x)


def fit(buf: SnapshotBuffer, svd_tol=DEFAULT_SVD_TOL) -> DmdModel:
    """K = X+ pinv(X) with singular values below svd_tol * sigma_max truncated.

    The result minimizes ||X+ - K X||_F over matrices acting on the retained
    row space of X.
    """
    if not buf.can_fit:
        raise InsufficientDataError("need at least 2 snapshot columns to fit")
    X, Xp = buf.X, buf.X_plus
    U, sig, Vt = np.linalg.svd(X, full_matrices=False)
    if sig.size == 0 or sig[0] == 0.0:
        rank = 0
        K = np.zeros((buf.dim, buf.dim))
    else:
        rank = int(np.sum(sig > svd_tol * sig[0]))
        Ur, sr, Vr = U[:, :rank], sig[:rank], Vt[:rank]
        K = (Xp @ Vr.T) @ np.diag(1.0 / sr) @ Ur.T
    num = np.linalg.norm(Xp - K @ X)
    den = np.linalg.norm(Xp)
    residual = float(num / den) if den > 0 else float(num)
    return DmdModel(K=K, residual=residual, rank_used=rank)


def predict(m: DmdModel, x):
    """One-step prediction K @ x."""
    x = np.asarray(x, float)
    if x.shape != (m.K.shape[1],):
        raise InvalidInputError(f"state length {x.shape} != {m.K.shape[1]}")
    return m.K @ x

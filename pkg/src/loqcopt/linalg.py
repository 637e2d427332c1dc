"""Small dense linear-algebra helpers shared by the parametrization and objectives."""

from __future__ import annotations

import numpy as np


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def top_singular(w: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest singular value with its left/right singular vectors.

    ``d sigma = Re(u^dagger dW v)`` wherever the top singular value is simple.
    """
    left, s, right_h = np.linalg.svd(w)
    return float(s[0]), left[:, 0], right_h[0].conj()


class AntiHermitianExp:
    """``exp(K)`` for anti-Hermitian ``K`` through the eigendecomposition of ``-iK``.

    Keeps the eigenbasis so the gradient of a function of ``exp(K)`` can be pulled
    back to ``K`` with the Daleckii-Krein divided differences.
    """

    def __init__(self, k: np.ndarray) -> None:
        h = -1j * np.asarray(k, dtype=complex)
        h = 0.5 * (h + h.conj().T)
        lam, v = np.linalg.eigh(h)
        self.v = v
        self.phases = np.exp(1j * lam)
        self.value = (v * self.phases) @ v.conj().T
        diff = lam[:, None] - lam[None, :]
        close = np.abs(diff) < 1e-9
        safe = np.where(close, 1.0, diff)
        # (e^{i a} - e^{i b}) / (i (a - b)), limit e^{i a} on the diagonal
        dd = (self.phases[:, None] - self.phases[None, :]) / (1j * safe)
        mean = np.exp(0.5j * (lam[:, None] + lam[None, :]))
        self._divdiff = np.where(close, mean, dd)

    def pullback(self, g: np.ndarray) -> np.ndarray:
        """Map ``G`` with ``df = 2 Re sum(G * dU)`` to ``C`` with ``df = 2 Re sum(C * dK)``."""
        v = self.v
        b = (v.T @ g @ v.conj()) * self._divdiff
        return v.conj() @ b @ v.T

    def directional(self, e: np.ndarray) -> np.ndarray:
        """Frechet derivatives ``L(K, E_j)`` for a stack of directions ``E`` of shape (m, N, N)."""
        v = self.v
        rotated = np.einsum("pa,jab,bq->jpq", v.conj().T, e, v)
        return np.einsum("pa,jab,bq->jpq", v, rotated * self._divdiff, v.conj().T)

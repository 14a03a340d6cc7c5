"""Per-sample loss heads: softmax cross-entropy and squared-error consistency."""

from __future__ import annotations

import numpy as np

from tdsl.errors import ShapeError


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log softmax with max-subtraction stabilization."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Negative log likelihood of `label` under softmax(logits).

    Returns (loss, grad) with grad = softmax(logits) - onehot(label).
    Stable for arbitrarily large logits.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ShapeError(f"logits must be a 1-d vector, got shape {z.shape}")
    c = z.shape[0]
    if not 0 <= label < c:
        raise IndexError(f"label {label} out of range [0, {c})")
    logp = log_softmax(z)
    loss = -float(logp[label])
    grad = np.exp(logp)
    grad[label] -= 1.0
    return loss, grad


def mse_consistency(
    z: np.ndarray, z_prime: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Squared distance ||z - z'||^2 between the two path outputs.

    Per-sample contribution only; the 1/(C|B|) batch factor is applied
    where the batch loss is assembled. Gradients are 2(z - z') w.r.t. z
    and -2(z - z') w.r.t. z'.
    """
    z = np.asarray(z, dtype=np.float64)
    zp = np.asarray(z_prime, dtype=np.float64)
    if z.shape != zp.shape:
        raise ShapeError(f"shape mismatch: {z.shape} vs {zp.shape}")
    diff = z - zp
    loss = float((diff * diff).sum())
    return loss, 2.0 * diff, -2.0 * diff

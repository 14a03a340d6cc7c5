"""Dense-tensor layer kernels: forward and hand-derived backward passes.

Tensors are 64-bit row-major numpy arrays. Every op below accepts the
documented single-example shape or the same shape with one extra leading
batch axis; the batched path is the one the training loop uses.

Convolutions are "same" zero-padded cross-correlations followed by ReLU.
A filter of width f pads (f-1)//2 cells before and f//2 cells after along
each spatial axis, so even widths pad asymmetrically (width 4 pads 1 left,
2 right) and output spatial dims always equal input spatial dims.

Forward passes that need state for the backward return (output, cache).
Backward passes return a LayerGrad; a cache is consumed by exactly one
backward call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tdsl.errors import ConfigError, ShapeError, StateError


@dataclass
class LayerGrad:
    """Gradients produced by one layer's backward pass.

    param_grads maps parameter name to a gradient shaped like that
    parameter; input_grad is shaped like the layer input (None for the
    embedding lookup, whose input is discrete).
    """

    param_grads: dict[str, np.ndarray] = field(default_factory=dict)
    input_grad: np.ndarray | None = None


def _as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# Embedding lookup
# ---------------------------------------------------------------------------

def embedding_forward(table: np.ndarray, token_ids) -> np.ndarray:
    """Row-select word vectors: output[i] = table[token_ids[i]].

    token_ids may be a flat id sequence (returns [n, k]) or a batch of
    them (returns [B, n, k]).
    """
    table = _as_f64(table)
    ids = np.asarray(token_ids)
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be 2-d, got shape {table.shape}")
    if ids.size == 0:
        raise ShapeError("token_ids must be non-empty")
    vocab = table.shape[0]
    bad = (ids < 0) | (ids >= vocab)
    if bad.any():
        pos = tuple(int(p) for p in np.argwhere(bad)[0])
        pos_label = pos[0] if len(pos) == 1 else pos
        raise IndexError(
            f"token id {int(ids[pos])} at position {pos_label} out of range [0, {vocab})"
        )
    return table[ids]


def embedding_backward(upstream: np.ndarray, token_ids, vocab_size: int) -> LayerGrad:
    """Scatter-add output gradients back onto the looked-up table rows."""
    upstream = _as_f64(upstream)
    ids = np.asarray(token_ids)
    k = upstream.shape[-1]
    grad = np.zeros((vocab_size, k))
    np.add.at(grad, ids.ravel(), upstream.reshape(-1, k))
    return LayerGrad(param_grads={"table": grad}, input_grad=None)


# ---------------------------------------------------------------------------
# Convolution (same padding, ReLU)
# ---------------------------------------------------------------------------

def _same_pads(f: int) -> tuple[int, int]:
    return (f - 1) // 2, f // 2


@dataclass
class ConvCache:
    padded: np.ndarray          # zero-padded input, batched
    active: np.ndarray          # ReLU mask (pre-activation > 0)
    filters: np.ndarray
    pads: tuple[int, int, int, int]
    batched: bool
    consumed: bool = False


def conv2d_forward(
    x: np.ndarray, filters: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, ConvCache]:
    """Same-padded cross-correlation plus ReLU.

    x: [H, W, Cin] or [B, H, W, Cin]; filters: [fh, fw, Cin, Cout];
    bias: [Cout]. Output spatial dims equal input spatial dims.
    """
    x = _as_f64(x)
    filters = _as_f64(filters)
    bias = _as_f64(bias)
    if filters.ndim != 4:
        raise ShapeError(f"filters must be 4-d [fh, fw, Cin, Cout], got {filters.shape}")
    batched = x.ndim == 4
    if not batched:
        if x.ndim != 3:
            raise ShapeError(f"input must be [H, W, Cin] or [B, H, W, Cin], got {x.shape}")
        x = x[None]
    fh, fw, cin, cout = filters.shape
    if x.shape[3] != cin:
        raise ShapeError(
            f"input has {x.shape[3]} channels but filters expect {cin}"
        )
    if bias.shape != (cout,):
        raise ShapeError(f"bias shape {bias.shape} does not match {cout} output channels")
    nb, h, w, _ = x.shape
    pt, pb = _same_pads(fh)
    pl, pr = _same_pads(fw)
    padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))

    pre = np.empty((nb, h, w, cout))
    pre[:] = bias
    for dy in range(fh):
        for dx in range(fw):
            window = padded[:, dy : dy + h, dx : dx + w, :]
            pre += np.tensordot(window, filters[dy, dx], axes=([3], [0]))
    out = np.maximum(pre, 0.0)
    cache = ConvCache(padded, pre > 0.0, filters, (pt, pb, pl, pr), batched)
    return (out if batched else out[0]), cache


def conv2d_backward(upstream: np.ndarray, cache: ConvCache | None) -> LayerGrad:
    """Exact gradient of conv2d_forward w.r.t. filters, bias, and input."""
    if cache is None or cache.consumed:
        raise StateError("conv2d_backward needs the cache from a fresh forward call")
    cache.consumed = True
    g = _as_f64(upstream)
    if not cache.batched:
        g = g[None]
    if g.shape != cache.active.shape:
        raise StateError(
            f"upstream shape {g.shape} does not match cached output {cache.active.shape}"
        )
    g = g * cache.active
    filters = cache.filters
    fh, fw, cin, _ = filters.shape
    nb, h, w, _ = g.shape
    pt, _, pl, _ = cache.pads

    dbias = g.sum(axis=(0, 1, 2))
    dfilters = np.empty_like(filters)
    dpadded = np.zeros_like(cache.padded)
    for dy in range(fh):
        for dx in range(fw):
            window = cache.padded[:, dy : dy + h, dx : dx + w, :]
            dfilters[dy, dx] = np.tensordot(window, g, axes=([0, 1, 2], [0, 1, 2]))
            dpadded[:, dy : dy + h, dx : dx + w, :] += np.tensordot(
                g, filters[dy, dx], axes=([3], [1])
            )
    dx = dpadded[:, pt : pt + h, pl : pl + w, :]
    if not cache.batched:
        dx = dx[0]
    return LayerGrad(param_grads={"filters": dfilters, "bias": dbias}, input_grad=dx)


# ---------------------------------------------------------------------------
# 2x2 max pooling (ceiling output size, partial edge windows)
# ---------------------------------------------------------------------------

@dataclass
class PoolCache:
    argmax: np.ndarray          # winning in-window slot, in [0, 4)
    in_hw: tuple[int, int]
    batched: bool
    consumed: bool = False


def maxpool2d_forward(x: np.ndarray) -> tuple[np.ndarray, PoolCache]:
    """Max over non-overlapping 2x2 windows; edge windows may be smaller.

    x: [H, W, C] or [B, H, W, C]; output spatial dims are ceil(H/2),
    ceil(W/2). The winning position per window is recorded for backward.
    """
    x = _as_f64(x)
    batched = x.ndim == 4
    if not batched:
        if x.ndim != 3:
            raise ShapeError(f"input must be [H, W, C] or [B, H, W, C], got {x.shape}")
        x = x[None]
    nb, h, w, c = x.shape
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    padded = np.full((nb, 2 * h2, 2 * w2, c), -np.inf)
    padded[:, :h, :w, :] = x
    windows = (
        padded.reshape(nb, h2, 2, w2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(nb, h2, w2, 4, c)
    )
    arg = windows.argmax(axis=3)
    out = np.take_along_axis(windows, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    cache = PoolCache(arg, (h, w), batched)
    return (out if batched else out[0]), cache


def maxpool2d_backward(upstream: np.ndarray, cache: PoolCache | None) -> LayerGrad:
    """Route each window's upstream gradient to its argmax position."""
    if cache is None or cache.consumed:
        raise StateError("maxpool2d_backward needs the cache from a fresh forward call")
    cache.consumed = True
    g = _as_f64(upstream)
    if not cache.batched:
        g = g[None]
    if g.shape != cache.argmax.shape:
        raise StateError(
            f"upstream shape {g.shape} does not match cached output {cache.argmax.shape}"
        )
    nb, h2, w2, c = g.shape
    h, w = cache.in_hw
    dwindows = np.zeros((nb, h2, w2, 4, c))
    np.put_along_axis(dwindows, cache.argmax[:, :, :, None, :], g[:, :, :, None, :], axis=3)
    dpadded = (
        dwindows.reshape(nb, h2, w2, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(nb, 2 * h2, 2 * w2, c)
    )
    dx = dpadded[:, :h, :w, :]
    if not cache.batched:
        dx = dx[0]
    return LayerGrad(input_grad=dx)


# ---------------------------------------------------------------------------
# Inverted dropout
# ---------------------------------------------------------------------------

def dropout(
    x: np.ndarray, rate: float, rng: np.random.Generator, training: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Zero each element with probability `rate`, scaling survivors by
    1/(1-rate) so inference is the identity.

    Returns (output, mask); the mask already carries the survivor scale
    and is reused verbatim by the backward pass.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    x = _as_f64(x)
    if not training:
        return x, np.ones_like(x)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(upstream: np.ndarray, mask: np.ndarray | None) -> LayerGrad:
    if mask is None:
        raise StateError("dropout_backward needs the mask from the forward call")
    g = _as_f64(upstream)
    if g.shape != mask.shape:
        raise StateError(f"upstream shape {g.shape} does not match mask {mask.shape}")
    return LayerGrad(input_grad=g * mask)


# ---------------------------------------------------------------------------
# Dense projection (no activation)
# ---------------------------------------------------------------------------

def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map x.T w + b; x: [d] or [B, d], weights: [d, C], bias: [C]."""
    x = _as_f64(x)
    weights = _as_f64(weights)
    bias = _as_f64(bias)
    if weights.ndim != 2:
        raise ShapeError(f"weights must be 2-d [d, C], got {weights.shape}")
    if x.shape[-1] != weights.shape[0]:
        raise ShapeError(
            f"input feature size {x.shape[-1]} does not match weights {weights.shape}"
        )
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} does not match weights {weights.shape}")
    return x @ weights + bias


def dense_backward(upstream: np.ndarray, x: np.ndarray, weights: np.ndarray) -> LayerGrad:
    g = _as_f64(upstream)
    x = _as_f64(x)
    if g.shape[-1] != weights.shape[1] or x.shape[-1] != weights.shape[0]:
        raise StateError("dense_backward shapes do not match the forward call")
    if x.ndim == 1:
        dw = np.outer(x, g)
        db = g.copy()
    else:
        dw = x.T @ g
        db = g.sum(axis=0)
    dx = g @ weights.T
    return LayerGrad(param_grads={"weights": dw, "bias": db}, input_grad=dx)

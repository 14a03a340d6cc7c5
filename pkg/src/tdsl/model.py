"""The two-path network: an embedding feeding a shared three-branch CNN
trunk, then two structurally identical CNN paths with separate parameters.

The supervised path produces logits z, the unsupervised path z'. Each
branch of the trunk runs one square convolution (widths 3, 4, 5) over the
embedded token image and halves it with 2x2 max pooling; each path adds a
second 3x3 convolution and pooling per branch, flattens, concatenates the
three branches, applies dropout, and projects to class logits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, sqrt
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from tdsl.engine import (
    ConvCache,
    PoolCache,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout,
    dropout_backward,
    embedding_backward,
    embedding_forward,
    load_params,
    maxpool2d_backward,
    maxpool2d_forward,
    save_params,
    softmax,
)
from tdsl.errors import ConfigError, ShapeError, StateError

PATHS = ("sup", "unsup")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int
    max_len: int
    class_count: int = 2
    branch_widths: tuple[int, ...] = (3, 4, 5)
    shared_filters: int = 100
    path_filters: int = 100

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")
        if not self.branch_widths:
            raise ConfigError("at least one branch width is required")

    @property
    def pooled_hw(self) -> tuple[int, int]:
        """Spatial size of one branch after the path's second pooling."""
        h = ceil(ceil(self.max_len / 2) / 2)
        w = ceil(ceil(self.embed_dim / 2) / 2)
        return h, w

    @property
    def branch_flat(self) -> int:
        h, w = self.pooled_hw
        return h * w * self.path_filters

    @property
    def d_concat(self) -> int:
        return len(self.branch_widths) * self.branch_flat


@dataclass
class TdslParams:
    """Named parameter tensors plus the shapes they were built for.

    The two paths own distinct storage; nothing is aliased.
    """

    config: ModelConfig
    values: dict[str, np.ndarray]

    def copy(self) -> "TdslParams":
        return TdslParams(self.config, {k: v.copy() for k, v in self.values.items()})

    def names(self) -> list[str]:
        return list(self.values)

    def save(self, path: Union[str, Path]) -> None:
        save_params(path, self.values)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter name -> shape map, in checkpoint order."""
    s, p, c = config.shared_filters, config.path_filters, config.class_count
    shapes: dict[str, tuple[int, ...]] = {
        "embedding": (config.vocab_size, config.embed_dim),
    }
    for b in config.branch_widths:
        shapes[f"shared.b{b}.w"] = (b, b, 1, s)
        shapes[f"shared.b{b}.b"] = (s,)
    for path in PATHS:
        for b in config.branch_widths:
            shapes[f"{path}.b{b}.w"] = (3, 3, s, p)
            shapes[f"{path}.b{b}.b"] = (p,)
    for path in PATHS:
        shapes[f"{path}.proj.w"] = (config.d_concat, c)
        shapes[f"{path}.proj.b"] = (c,)
    return shapes


def init_params(vocab_size: int, embed_dim: int, max_len: int, seed: int,
                config: Optional[ModelConfig] = None) -> TdslParams:
    """Glorot-uniform weights, zero biases, uniform(-0.05, 0.05) embedding."""
    if config is None:
        config = ModelConfig(vocab_size=vocab_size, embed_dim=embed_dim, max_len=max_len)
    elif (config.vocab_size, config.embed_dim, config.max_len) != (vocab_size, embed_dim, max_len):
        raise ConfigError("explicit config disagrees with positional sizes")
    rng = np.random.default_rng(seed)
    values: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name == "embedding":
            values[name] = rng.uniform(-0.05, 0.05, size=shape)
        elif name.endswith(".w"):
            if len(shape) == 4:
                fh, fw, cin, cout = shape
                fan_in, fan_out = fh * fw * cin, fh * fw * cout
            else:
                fan_in, fan_out = shape
            bound = sqrt(6.0 / (fan_in + fan_out))
            values[name] = rng.uniform(-bound, bound, size=shape)
        else:
            values[name] = np.zeros(shape)
    return TdslParams(config=config, values=values)


def load_tdsl_params(path: Union[str, Path], config: ModelConfig) -> TdslParams:
    """Load a checkpoint and validate every tensor against the config."""
    values = load_params(path)
    expected = param_shapes(config)
    if list(values) != list(expected):
        raise ShapeError(
            f"checkpoint parameter names {list(values)} do not match the "
            f"configured model {list(expected)}"
        )
    for name, shape in expected.items():
        if values[name].shape != shape:
            raise ShapeError(
                f"checkpoint tensor '{name}' has shape {values[name].shape}, "
                f"expected {shape}"
            )
    return TdslParams(config=config, values=values)


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------

@dataclass
class SharedTrace:
    token_ids: np.ndarray
    conv_caches: list[ConvCache]
    pool_caches: list[PoolCache]


@dataclass
class PathTrace:
    conv_caches: list[ConvCache]
    pool_caches: list[PoolCache]
    pooled_shapes: list[tuple[int, ...]]
    dropped_input: np.ndarray  # post-dropout concat vector, input to the projection
    dropout_mask: np.ndarray


@dataclass
class ForwardTrace:
    """Everything one backward pass needs; consumed exactly once."""

    shared: SharedTrace
    paths: dict[str, PathTrace]
    batched: bool
    consumed: bool = field(default=False)


def _embed_image(params: TdslParams, token_ids) -> tuple[np.ndarray, np.ndarray, bool]:
    ids = np.asarray(token_ids)
    batched = ids.ndim == 2
    if ids.ndim not in (1, 2):
        raise ShapeError(f"token_ids must be 1-d or 2-d, got shape {ids.shape}")
    if ids.shape[-1] != params.config.max_len:
        raise ShapeError(
            f"expected sequences of length {params.config.max_len}, got {ids.shape[-1]}"
        )
    embedded = embedding_forward(params.values["embedding"], ids)
    image = embedded[..., None]  # 1-channel image: [.., max_len, embed_dim, 1]
    return image, ids, batched


def forward_shared(params: TdslParams, token_ids, rng=None, training: bool = False
                   ) -> tuple[list[np.ndarray], SharedTrace]:
    """Embed and run the three trunk branches: conv(bxb) + ReLU + 2x2 pool."""
    image, ids, _ = _embed_image(params, token_ids)
    feats, conv_caches, pool_caches = [], [], []
    for b in params.config.branch_widths:
        conv_out, ccache = conv2d_forward(
            image, params.values[f"shared.b{b}.w"], params.values[f"shared.b{b}.b"]
        )
        pooled, pcache = maxpool2d_forward(conv_out)
        feats.append(pooled)
        conv_caches.append(ccache)
        pool_caches.append(pcache)
    return feats, SharedTrace(token_ids=ids, conv_caches=conv_caches, pool_caches=pool_caches)


def forward_path(params: TdslParams, path: str, shared_feats: Sequence[np.ndarray],
                 rng: Optional[np.random.Generator] = None, training: bool = False,
                 dropout_rate: float = 0.5) -> tuple[np.ndarray, PathTrace]:
    """One path: per branch conv(3x3) + ReLU + pool + flatten, then
    concat -> dropout -> dense projection to class logits."""
    if path not in PATHS:
        raise ConfigError(f"unknown path '{path}', expected one of {PATHS}")
    if training and rng is None:
        raise ConfigError("training-mode forward needs a random generator for dropout")
    flats, conv_caches, pool_caches, pooled_shapes = [], [], [], []
    batched = shared_feats[0].ndim == 4
    for b, feat in zip(params.config.branch_widths, shared_feats):
        conv_out, ccache = conv2d_forward(
            feat, params.values[f"{path}.b{b}.w"], params.values[f"{path}.b{b}.b"]
        )
        pooled, pcache = maxpool2d_forward(conv_out)
        pooled_shapes.append(pooled.shape)
        flats.append(pooled.reshape(pooled.shape[0], -1) if batched else pooled.reshape(-1))
        conv_caches.append(ccache)
        pool_caches.append(pcache)
    concat = np.concatenate(flats, axis=-1)
    dropped, mask = dropout(concat, dropout_rate, rng, training=training)
    z = dense_forward(dropped, params.values[f"{path}.proj.w"], params.values[f"{path}.proj.b"])
    trace = PathTrace(
        conv_caches=conv_caches,
        pool_caches=pool_caches,
        pooled_shapes=pooled_shapes,
        dropped_input=dropped,
        dropout_mask=mask,
    )
    return z, trace


def forward_train(params: TdslParams, token_ids, rng: Optional[np.random.Generator],
                  training: bool = True, dropout_rate: float = 0.5
                  ) -> tuple[np.ndarray, np.ndarray, ForwardTrace]:
    """Full two-path forward: returns (z, z', trace).

    The supervised and unsupervised paths draw independent dropout masks
    from the same generator, in that order.
    """
    batched = np.asarray(token_ids).ndim == 2
    shared_feats, shared_trace = forward_shared(params, token_ids, rng, training)
    z, sup_trace = forward_path(params, "sup", shared_feats, rng, training, dropout_rate)
    zp, unsup_trace = forward_path(params, "unsup", shared_feats, rng, training, dropout_rate)
    trace = ForwardTrace(
        shared=shared_trace,
        paths={"sup": sup_trace, "unsup": unsup_trace},
        batched=batched,
    )
    return z, zp, trace


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

def _backward_path(params: TdslParams, path: str, dz: np.ndarray, trace: PathTrace,
                   grads: dict[str, np.ndarray]) -> list[np.ndarray]:
    """Backprop one path; returns per-branch gradients w.r.t. shared features."""
    proj = dense_backward(dz, trace.dropped_input, params.values[f"{path}.proj.w"])
    grads[f"{path}.proj.w"] = proj.param_grads["weights"]
    grads[f"{path}.proj.b"] = proj.param_grads["bias"]
    d_concat = dropout_backward(proj.input_grad, trace.dropout_mask).input_grad

    branch_feat_grads = []
    offset = 0
    widths = params.config.branch_widths
    for i, b in enumerate(widths):
        shape = trace.pooled_shapes[i]
        flat = int(np.prod(shape[-3:]))
        segment = d_concat[..., offset : offset + flat]
        offset += flat
        d_pooled = segment.reshape(shape)
        d_conv = maxpool2d_backward(d_pooled, trace.pool_caches[i])
        conv_grad = conv2d_backward(d_conv.input_grad, trace.conv_caches[i])
        grads[f"{path}.b{b}.w"] = conv_grad.param_grads["filters"]
        grads[f"{path}.b{b}.b"] = conv_grad.param_grads["bias"]
        branch_feat_grads.append(conv_grad.input_grad)
    return branch_feat_grads


def backward_train(params: TdslParams, dz: np.ndarray, dzp: np.ndarray,
                   trace: ForwardTrace) -> dict[str, np.ndarray]:
    """Hand-derived full backward pass.

    dz and dzp are the loss gradients w.r.t. z and z'. Returns gradients for
    every parameter, keyed by checkpoint name. Consumes the trace.
    """
    if trace is None or trace.consumed:
        raise StateError("forward trace already consumed; rerun the forward pass")
    trace.consumed = True

    grads: dict[str, np.ndarray] = {}
    sup_feat_grads = _backward_path(params, "sup", dz, trace.paths["sup"], grads)
    unsup_feat_grads = _backward_path(params, "unsup", dzp, trace.paths["unsup"], grads)

    d_image = None
    for i, b in enumerate(params.config.branch_widths):
        d_feat = sup_feat_grads[i] + unsup_feat_grads[i]
        d_conv = maxpool2d_backward(d_feat, trace.shared.pool_caches[i])
        conv_grad = conv2d_backward(d_conv.input_grad, trace.shared.conv_caches[i])
        grads[f"shared.b{b}.w"] = conv_grad.param_grads["filters"]
        grads[f"shared.b{b}.b"] = conv_grad.param_grads["bias"]
        d_image = conv_grad.input_grad if d_image is None else d_image + conv_grad.input_grad

    d_embedded = d_image[..., 0]
    emb = embedding_backward(d_embedded, trace.shared.token_ids, params.config.vocab_size)
    grads["embedding"] = emb.param_grads["table"]
    # match checkpoint ordering
    return {name: grads[name] for name in param_shapes(params.config)}


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def predict(params: TdslParams, token_ids) -> tuple[np.ndarray, np.ndarray]:
    """Supervised-path inference: (predicted labels, class probabilities).

    Dropout is off; argmax ties break toward the lower class index. For a
    single sequence returns (scalar label array, [C] probabilities).
    """
    shared_feats, _ = forward_shared(params, token_ids, rng=None, training=False)
    z, _ = forward_path(params, "sup", shared_feats, rng=None, training=False)
    probs = softmax(z)
    labels = np.argmax(probs, axis=-1)
    return labels, probs

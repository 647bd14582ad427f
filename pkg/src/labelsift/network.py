"""Minimal trainable network: dense and convolutional layers with exact
analytic backpropagation, plain SGD, and a numerically stable softmax head.

Layers share one protocol: forward(x, train, rng) caches whatever backward
needs; backward(grad) stores parameter gradients and returns the input
gradient. All math is dtype-preserving so gradient checks can run in
float64 while training runs in float32.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError

EPS = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis, stabilized by a max shift."""
    z = np.asarray(logits)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def weighted_cross_entropy(probs: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> float:
    """Mean over the batch of -w_class * ln(p_true + 1e-12)."""
    p_true = (probs * targets).sum(axis=-1)
    w = np.asarray(weights)[np.argmax(targets, axis=-1)]
    return float(np.mean(-w * np.log(p_true + EPS)))


def softmax_cross_entropy_grad(probs: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gradient of weighted_cross_entropy(softmax(z)) with respect to z.

    The p/(p + eps) factor keeps this exact for the epsilon-padded loss, so
    finite-difference checks agree to machine precision.
    """
    p_true = (probs * targets).sum(axis=-1)
    w = np.asarray(weights)[np.argmax(targets, axis=-1)]
    scale = (w * p_true / (p_true + EPS)) / probs.shape[0]
    return (probs - targets) * scale[:, None].astype(probs.dtype)


def he_uniform(rng, shape, fan_in, dtype):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Dense:
    def __init__(self, rng, n_in, n_out, dtype=np.float32):
        self.w = he_uniform(rng, (n_in, n_out), n_in, dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.gw = None
        self.gb = None

    def forward(self, x, train=False, rng=None):
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad, need_input_grad=True):
        self.gw = self._x.T @ grad
        self.gb = grad.sum(axis=0)
        if not need_input_grad:
            return None
        return grad @ self.w.T

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.gw, self.gb]


class ReLU:
    def forward(self, x, train=False, rng=None):
        self._pos = x > 0
        return np.maximum(x, x.dtype.type(0))

    def backward(self, grad, need_input_grad=True):
        return grad * self._pos

    def params(self):
        return []

    def grads(self):
        return []


class Dropout:
    """Inverted dropout: each unit is zeroed with probability p at train
    time and survivors are scaled by 1/(1-p); inference is the identity."""

    def __init__(self, p):
        if not 0.0 <= p < 1.0:
            raise ConfigurationError("BAD_DROPOUT", f"dropout must be in [0, 1), got {p}")
        self.p = p
        self.mask = None

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self.mask = None
            return x
        keep = rng.random(x.shape) >= self.p
        self.mask = keep.astype(x.dtype) / x.dtype.type(1.0 - self.p)
        return x * self.mask

    def backward(self, grad, need_input_grad=True):
        if self.mask is None:
            return grad
        return grad * self.mask

    def params(self):
        return []

    def grads(self):
        return []


class Flatten:
    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad, need_input_grad=True):
        return grad.reshape(self._shape)

    def params(self):
        return []

    def grads(self):
        return []


def _im2col(x, kh, kw):
    # (B, H, W, C) -> (B*OH*OW, kh*kw*C) patches, valid, stride 1
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (B, OH, OW, C, kh, kw)
    b, oh, ow = windows.shape[:3]
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(b * oh * ow, kh * kw * x.shape[3])
    return np.ascontiguousarray(cols), (b, oh, ow)


class Conv2D:
    """2-d correlation, valid padding, stride 1, NHWC layout."""

    def __init__(self, rng, kh, kw, c_in, c_out, dtype=np.float32):
        self.kh, self.kw = kh, kw
        self.w = he_uniform(rng, (kh, kw, c_in, c_out), kh * kw * c_in, dtype)
        self.b = np.zeros(c_out, dtype=dtype)
        self.gw = None
        self.gb = None

    def forward(self, x, train=False, rng=None):
        if x.shape[1] < self.kh or x.shape[2] < self.kw:
            raise ConfigurationError(
                "INPUT_TOO_SMALL", f"spatial size {x.shape[1:3]} smaller than the {self.kh}x{self.kw} kernel"
            )
        self._xshape = x.shape
        self._cols, (b, oh, ow) = _im2col(x, self.kh, self.kw)
        c_out = self.w.shape[3]
        out = self._cols @ self.w.reshape(-1, c_out)
        out += self.b
        return out.reshape(b, oh, ow, c_out)

    def backward(self, grad, need_input_grad=True):
        kh, kw = self.kh, self.kw
        c_in, c_out = self.w.shape[2], self.w.shape[3]
        b, oh, ow, _ = grad.shape
        gmat = np.ascontiguousarray(grad.reshape(-1, c_out))
        self.gw = (self._cols.T @ gmat).reshape(self.w.shape)
        self.gb = gmat.sum(axis=0)
        if not need_input_grad:
            return None
        # one matmul against every transposed kernel position, then
        # scatter-add the kh*kw shifted contributions into the input gradient
        w_all = np.ascontiguousarray(self.w.transpose(3, 0, 1, 2).reshape(c_out, kh * kw * c_in))
        contrib = (gmat @ w_all).reshape(b, oh, ow, kh, kw, c_in)
        dx = np.zeros(self._xshape, dtype=grad.dtype)
        for a in range(kh):
            for bb in range(kw):
                dx[:, a : a + oh, bb : bb + ow, :] += contrib[:, :, :, a, bb, :]
        return dx

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.gw, self.gb]


class MaxPool2D:
    """Non-overlapping max pooling (stride equals window size); rows and
    columns beyond the last full window are dropped. The gradient routes
    exclusively to the argmax position of each window (first on ties)."""

    def __init__(self, size):
        self.size = size

    def forward(self, x, train=False, rng=None):
        s = self.size
        b, h, w, c = x.shape
        oh, ow = h // s, w // s
        if oh < 1 or ow < 1:
            raise ConfigurationError(
                "INPUT_TOO_SMALL", f"spatial size ({h}, {w}) smaller than the {s}x{s} pooling window"
            )
        self._xshape = x.shape
        windows = x[:, : oh * s, : ow * s, :].reshape(b, oh, s, ow, s, c)
        flat = windows.transpose(0, 1, 3, 2, 4, 5).reshape(b, oh, ow, s * s, c)
        self._argmax = flat.argmax(axis=3)
        return np.take_along_axis(flat, self._argmax[:, :, :, None, :], axis=3)[:, :, :, 0, :]

    def backward(self, grad, need_input_grad=True):
        s = self.size
        b, oh, ow, c = grad.shape
        routed = np.zeros((b, oh, ow, s * s, c), dtype=grad.dtype)
        np.put_along_axis(routed, self._argmax[:, :, :, None, :], grad[:, :, :, None, :], axis=3)
        routed = routed.reshape(b, oh, ow, s, s, c).transpose(0, 1, 3, 2, 4, 5)
        out = np.zeros(self._xshape, dtype=grad.dtype)
        out[:, : oh * s, : ow * s, :] = routed.reshape(b, oh * s, ow * s, c)
        return out

    def params(self):
        return []

    def grads(self):
        return []


class Network:
    def __init__(self, layers):
        self.layers = layers

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, grad):
        # the first layer has no upstream parameters, so its input gradient
        # is never consumed and is skipped
        for i in range(len(self.layers) - 1, -1, -1):
            grad = self.layers[i].backward(grad, need_input_grad=i > 0)
        return grad

    def sgd_step(self, lr):
        for layer in self.layers:
            for p, g in zip(layer.params(), layer.grads()):
                p -= lr * g

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def set_parameters(self, values):
        current = self.parameters()
        if len(current) != len(values):
            raise ConfigurationError("PARAM_MISMATCH", f"expected {len(current)} tensors, got {len(values)}")
        for p, v in zip(current, values):
            np.copyto(p, v)

    def predict_proba(self, x, batch_size=64):
        """Inference-mode class probabilities, computed in chunks."""
        chunks = []
        for start in range(0, x.shape[0], batch_size):
            logits = self.forward(x[start : start + batch_size], train=False)
            chunks.append(softmax(logits))
        return np.concatenate(chunks, axis=0)


# Fixed convolutional stack: two 2x2 conv layers per block, 3x3 pooling.
# Each block shrinks H by 2 then divides by 3, and every stage needs >= 3
# rows to pool (>= 2 to convolve), so the smallest workable input is 17:
# 17 -> 15 -> 5 -> 3 -> 1.
CONV_MIN_SPATIAL = 17
CONV_HEAD_UNITS = (128, 128, 128)


def build_dense_network(rng, input_dim, num_classes, depth, units, dropout, dtype=np.float32) -> Network:
    """Feedforward classifier: `depth` hidden ReLU layers of `units` units,
    dropout after each, then a linear layer of width num_classes."""
    if depth < 1:
        raise ConfigurationError("BAD_DEPTH", f"need at least 1 hidden layer, got {depth}")
    layers = []
    width = input_dim
    for _ in range(depth):
        layers.extend([Dense(rng, width, units, dtype), ReLU(), Dropout(dropout)])
        width = units
    layers.append(Dense(rng, width, num_classes, dtype))
    return Network(layers)


def build_conv_network(rng, input_shape, num_classes, dtype=np.float32) -> Network:
    """Fixed image classifier: two blocks of (conv, conv, 3x3 max-pool,
    dropout 0.25) with 48 then 96 kernels of size 2x2, then three dense
    ReLU layers with dropout 0.5 each and a linear output layer."""
    h, w, c = input_shape
    if h < CONV_MIN_SPATIAL or w < CONV_MIN_SPATIAL:
        raise ConfigurationError(
            "INPUT_TOO_SMALL",
            f"convolutional network needs at least {CONV_MIN_SPATIAL}x{CONV_MIN_SPATIAL} images, got {h}x{w}",
        )
    layers = []
    c_in = c
    for kernels in (48, 96):
        layers.extend(
            [
                Conv2D(rng, 2, 2, c_in, kernels, dtype),
                ReLU(),
                Conv2D(rng, 2, 2, kernels, kernels, dtype),
                ReLU(),
                MaxPool2D(3),
                Dropout(0.25),
            ]
        )
        c_in = kernels
    layers.append(Flatten())
    width = _conv_flat_width(h, w) * 96
    for units in CONV_HEAD_UNITS:
        layers.extend([Dense(rng, width, units, dtype), ReLU(), Dropout(0.5)])
        width = units
    layers.append(Dense(rng, width, num_classes, dtype))
    return Network(layers)


def _conv_flat_width(h, w):
    for _ in range(2):
        h, w = (h - 2) // 3, (w - 2) // 3
    return h * w


def build_from_descriptor(descriptor: dict, rng=None, dtype=np.float32) -> Network:
    """Rebuild a network from a checkpoint architecture descriptor."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if descriptor["type"] == "dense":
        return build_dense_network(
            rng,
            descriptor["input_dim"],
            descriptor["num_classes"],
            descriptor["depth"],
            descriptor["units"],
            descriptor["dropout"],
            dtype,
        )
    if descriptor["type"] == "conv":
        return build_conv_network(rng, tuple(descriptor["input_shape"]), descriptor["num_classes"], dtype)
    raise ConfigurationError("BAD_ARCHITECTURE", f"unknown architecture type {descriptor['type']!r}")

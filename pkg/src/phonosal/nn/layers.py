"""Layer primitives with explicit forward/backward passes.

Layers hold their parameters; per-call state travels in the cache value
returned by forward, so a layer instance can serve concurrent forward
passes.  backward returns (dx, grads) with grads aligned to param_names.
"""

from __future__ import annotations

import numpy as np

from .. import kernels

STATS_EPS = 1e-8  # variance epsilon in statistics pooling


class Layer:
    param_names: tuple = ()

    def params(self):
        return [getattr(self, n) for n in self.param_names]

    def set_params(self, values):
        for n, v in zip(self.param_names, values):
            setattr(self, n, v)

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy, cache):
        raise NotImplementedError

    def time_geometry(self):
        """(kernel, stride) footprint along the time axis."""
        return 1, 1


class Conv1D(Layer):
    """Same-padded 1-D convolution over time; channels are mel bins."""

    param_names = ("w", "b")

    def __init__(self, c_in, c_out, k, rng=None):
        if k % 2 == 0:
            raise ValueError("kernel length must be odd for same padding")
        self.c_in, self.c_out, self.k = c_in, c_out, k
        scale = np.sqrt(2.0 / (c_in * k))
        rng = rng or np.random.default_rng(0)
        self.w = rng.standard_normal((c_out, c_in, k)) * scale
        self.b = np.zeros(c_out)

    def forward(self, x):
        return kernels.conv1d_forward(x, self.w, self.b), x

    def backward(self, dy, cache):
        dx, dw, db = kernels.conv1d_backward(cache, self.w, dy)
        return dx, [dw, db]

    def time_geometry(self):
        return self.k, 1


class Conv2D(Layer):
    """Same-padded 2-D convolution; input laid out (B, C, mel, time)."""

    param_names = ("w", "b")

    def __init__(self, c_in, c_out, k, rng=None):
        if k % 2 == 0:
            raise ValueError("kernel side must be odd for same padding")
        self.c_in, self.c_out, self.k = c_in, c_out, k
        scale = np.sqrt(2.0 / (c_in * k * k))
        rng = rng or np.random.default_rng(0)
        self.w = rng.standard_normal((c_out, c_in, k, k)) * scale
        self.b = np.zeros(c_out)

    def forward(self, x):
        return kernels.conv2d_forward(x, self.w, self.b), x

    def backward(self, dy, cache):
        dx, dw, db = kernels.conv2d_backward(cache, self.w, dy)
        return dx, [dw, db]

    def time_geometry(self):
        return self.k, 1


class ReLU(Layer):
    def forward(self, x):
        y = np.maximum(x, 0.0)
        return y, (x > 0.0)

    def backward(self, dy, cache):
        return dy * cache, []


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2 (floor division on odd sizes)."""

    def forward(self, x):
        y, arg = kernels.maxpool2d_forward(x)
        return y, (arg, x.shape[2], x.shape[3])

    def backward(self, dy, cache):
        arg, H, W = cache
        return kernels.maxpool2d_backward(dy, arg, H, W), []

    def time_geometry(self):
        return 2, 2


class MergeFreqIntoChannels(Layer):
    """(B, C, H, W) -> (B, C*H, W) so statistics pooling runs over time."""

    def forward(self, x):
        B, C, H, W = x.shape
        return x.reshape(B, C * H, W), (C, H)

    def backward(self, dy, cache):
        C, H = cache
        B = dy.shape[0]
        return dy.reshape(B, C, H, dy.shape[2]), []


class StatsPool(Layer):
    """Concat per-channel mean and std over time: (B, C, T) -> (B, 2C)."""

    def forward(self, x):
        mean = x.mean(axis=2)
        var = x.var(axis=2)
        std = np.sqrt(var + STATS_EPS)
        return np.concatenate([mean, std], axis=1), (x, mean, std)

    def backward(self, dy, cache):
        x, mean, std = cache
        C = mean.shape[1]
        T = x.shape[2]
        dmean, dstd = dy[:, :C], dy[:, C:]
        dx = dmean[:, :, None] / T + dstd[:, :, None] * (x - mean[:, :, None]) / (T * std[:, :, None])
        return dx, []


class Dense(Layer):
    param_names = ("w", "b")

    def __init__(self, d_in, d_out, rng=None):
        self.d_in, self.d_out = d_in, d_out
        scale = np.sqrt(2.0 / d_in)
        rng = rng or np.random.default_rng(0)
        self.w = rng.standard_normal((d_out, d_in)) * scale
        self.b = np.zeros(d_out)

    def forward(self, x):
        return x @ self.w.T + self.b, x

    def backward(self, dy, cache):
        dx = dy @ self.w
        return dx, [dy.T @ cache, dy.sum(axis=0)]

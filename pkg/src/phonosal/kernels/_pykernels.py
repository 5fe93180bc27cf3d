"""Pure numpy implementations of the hot kernels.

All convolutions use "same" zero padding and stride 1; max pooling is
fixed at 2x2 windows with stride 2 (odd trailing rows/columns dropped).
Shapes follow the torch convention: batch first, channels second.
Convolutions are evaluated as im2col + a single GEMM.

The compiled backend in ``_ckernels.pyx`` implements the same contracts;
``phonosal.kernels`` picks one at import time.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND_NAME = "python"


def _check_channels(x, w):
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")


def _cols1d(x, K, pad):
    """(B, Ci, T) -> im2col matrix (B*T, Ci*K)."""
    B, Ci, T = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    cols = sliding_window_view(xp, K, axis=2)  # (B, Ci, T, K) view
    return cols.transpose(0, 2, 1, 3).reshape(B * T, Ci * K)


def conv1d_forward(x, w, b):
    """x: (B, Ci, T), w: (Co, Ci, K) with K odd, b: (Co,) -> (B, Co, T)."""
    _check_channels(x, w)
    B, Ci, T = x.shape
    Co, _, K = w.shape
    cols = _cols1d(x, K, (K - 1) // 2)
    y = cols @ w.reshape(Co, Ci * K).T + b
    return y.reshape(B, T, Co).transpose(0, 2, 1)


def conv1d_backward(x, w, dy):
    """Gradients of conv1d_forward; returns (dx, dw, db)."""
    B, Ci, T = x.shape
    Co, _, K = w.shape
    pad = (K - 1) // 2
    dy_flat = dy.transpose(0, 2, 1).reshape(B * T, Co)
    dw = (dy_flat.T @ _cols1d(x, K, pad)).reshape(Co, Ci, K)
    db = dy.sum(axis=(0, 2))
    dcols = (dy_flat @ w.reshape(Co, Ci * K)).reshape(B, T, Ci, K)
    dxp = np.zeros((B, Ci, T + 2 * pad), dtype=x.dtype)
    for k in range(K):
        dxp[:, :, k : k + T] += dcols[:, :, :, k].transpose(0, 2, 1)
    return dxp[:, :, pad : pad + T], dw, db


def _cols2d(x, KH, KW, ph, pw):
    """(B, Ci, H, W) -> im2col matrix (B*H*W, Ci*KH*KW)."""
    B, Ci, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = sliding_window_view(xp, (KH, KW), axis=(2, 3))  # (B, Ci, H, W, KH, KW)
    return cols.transpose(0, 2, 3, 1, 4, 5).reshape(B * H * W, Ci * KH * KW)


def conv2d_forward(x, w, b):
    """x: (B, Ci, H, W), w: (Co, Ci, KH, KW) odd kernels, b: (Co,) -> (B, Co, H, W)."""
    _check_channels(x, w)
    B, Ci, H, W = x.shape
    Co, _, KH, KW = w.shape
    cols = _cols2d(x, KH, KW, (KH - 1) // 2, (KW - 1) // 2)
    y = cols @ w.reshape(Co, -1).T + b
    return y.reshape(B, H, W, Co).transpose(0, 3, 1, 2)


def conv2d_backward(x, w, dy):
    """Gradients of conv2d_forward; returns (dx, dw, db)."""
    B, Ci, H, W = x.shape
    Co, _, KH, KW = w.shape
    ph, pw = (KH - 1) // 2, (KW - 1) // 2
    dy_flat = dy.transpose(0, 2, 3, 1).reshape(B * H * W, Co)
    dw = (dy_flat.T @ _cols2d(x, KH, KW, ph, pw)).reshape(Co, Ci, KH, KW)
    db = dy.sum(axis=(0, 2, 3))
    dcols = (dy_flat @ w.reshape(Co, -1)).reshape(B, H, W, Ci, KH, KW)
    dxp = np.zeros((B, Ci, H + 2 * ph, W + 2 * pw), dtype=x.dtype)
    for i in range(KH):
        for j in range(KW):
            dxp[:, :, i : i + H, j : j + W] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, ph : ph + H, pw : pw + W], dw, db


def maxpool2d_forward(x):
    """2x2/stride-2 max pool. x: (B, C, H, W) -> (y, argmax).

    argmax holds the flat index (0..3) of the winner inside each window,
    row-major; ties resolve to the first occurrence so backward routes the
    gradient to exactly one input.
    """
    B, C, H, W = x.shape
    H2, W2 = H // 2, W // 2
    win = x[:, :, : 2 * H2, : 2 * W2].reshape(B, C, H2, 2, W2, 2)
    win = win.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H2, W2, 4)
    arg = win.argmax(axis=-1).astype(np.int64)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return y, arg


def maxpool2d_backward(dy, arg, H, W):
    """Scatter pooled gradients back to the (B, C, H, W) input grid."""
    B, C, H2, W2 = dy.shape
    dwin = np.zeros((B, C, H2, W2, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, arg[..., None], dy[..., None], axis=-1)
    dwin = dwin.reshape(B, C, H2, W2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = np.zeros((B, C, H, W), dtype=dy.dtype)
    dx[:, :, : 2 * H2, : 2 * W2] = dwin.reshape(B, C, 2 * H2, 2 * W2)
    return dx

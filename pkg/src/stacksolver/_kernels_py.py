"""Pure-NumPy fallback for the dense-layer kernels.

Same contract as the compiled extension ``stacksolver._kernels``; selected at
import time by :mod:`stacksolver.neural` when the extension is unavailable.
"""

import numpy as np

COMPILED = False


def dense_forward(x, w, b, relu):
    """y = x @ w.T + b, optionally ReLU-clamped.  x: (B, d_in), w: (d_out, d_in)."""
    y = x @ w.T
    y += b
    if relu:
        np.maximum(y, 0.0, out=y)
    return y


def dense_backward(x, y, w, dy, relu):
    """Gradients for one dense layer.

    ``y`` is the post-activation output of the forward pass (used as the ReLU
    mask).  Returns (dx, dw, db); dy is consumed unmodified.
    """
    if relu:
        dy = dy * (y > 0.0)
    dw = dy.T @ x
    db = dy.sum(axis=0)
    dx = dy @ w
    return dx, dw, db

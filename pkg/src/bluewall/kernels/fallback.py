"""Pure-numpy implementation of the value-network kernels.

Same contract as the compiled extension in ``_core.pyx``: a 3-layer
perceptron (two ReLU hidden layers, linear output) evaluated and
differentiated in float64.  The ReLU derivative is taken as 0 at exactly
zero pre-activation in both backends.
"""

import numpy as np

BACKEND = "numpy"


def mlp_forward(x, w1, b1, w2, b2, w3, b3):
    """Forward pass.

    x: (batch, in_dim).  Returns (h1, h2, out) where h1/h2 are the
    post-ReLU hidden activations kept for the backward pass.
    """
    h1 = np.maximum(x @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    out = h2 @ w3 + b3
    return h1, h2, out


def mlp_backward(x, h1, h2, w2, w3, dout):
    """Gradients of the loss w.r.t. all parameters given dL/dout."""
    dw3 = h2.T @ dout
    db3 = dout.sum(axis=0)
    dz2 = (dout @ w3.T) * (h2 > 0.0)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (h1 > 0.0)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2, dw3, db3

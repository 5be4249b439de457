"""Pure-numpy kernel implementations (fallback backend).

Semantics must match ``_cy`` exactly: same update order, same handling of
duplicate/collided negative samples, so that either backend can run the
test suite.
"""

import numpy as np


def _sigmoid(x):
    # branch on sign to stay finite for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_gates_forward(z, c_prev, i, f, g, o, c, tc, h):
    """Fused LSTM cell pointwise ops for one timestep.

    ``z`` is the [B, 4H] pre-activation (x@Wx + h@Wh + b) with gate column
    order (input, forget, candidate, output).  All other arrays are [B, H]
    and are written in place.
    """
    H = c_prev.shape[1]
    i[:] = _sigmoid(z[:, :H])
    f[:] = _sigmoid(z[:, H:2 * H])
    np.tanh(z[:, 2 * H:3 * H], out=g)
    o[:] = _sigmoid(z[:, 3 * H:])
    c[:] = f * c_prev + i * g
    np.tanh(c, out=tc)
    h[:] = o * tc


def lstm_gates_backward(dh, dc, i, f, g, o, c_prev, tc, dz, dc_prev):
    """Backward counterpart of :func:`lstm_gates_forward`.

    ``dh``/``dc`` are the gradients flowing into this timestep's h and c;
    fills ``dz`` [B, 4H] (pre-activation gradient) and ``dc_prev`` [B, H].
    """
    H = i.shape[1]
    do = dh * tc
    dct = dc + dh * o * (1.0 - tc * tc)
    dz[:, :H] = (dct * g) * i * (1.0 - i)
    dz[:, H:2 * H] = (dct * c_prev) * f * (1.0 - f)
    dz[:, 2 * H:3 * H] = (dct * i) * (1.0 - g * g)
    dz[:, 3 * H:] = do * o * (1.0 - o)
    dc_prev[:] = dct * f


def adam_step(p, grad, m, v, lr, beta1, beta2, eps, b1t, b2t):
    """In-place Adam update on flat views; ``b1t``/``b2t`` are beta^t."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    denom = np.sqrt(v / (1.0 - b2t))
    denom += eps
    p -= lr * (m / (1.0 - b1t)) / denom


def sgns_train_block(syn0, syn1, inputs, targets, alphas):
    """Skip-gram negative-sampling updates over a block of pairs.

    ``targets[p, 0]`` is the positive context row, the rest are sampled
    negatives.  Negatives that collide with the positive are skipped.
    Per pair the scores are computed against the pre-update rows, then
    both matrices are updated (syn1 rows first, then the input row).
    Returns the summed negative log likelihood.
    """
    n, k1 = targets.shape
    labels = np.zeros(k1, dtype=syn0.dtype)
    labels[0] = 1.0
    loss = 0.0
    for p in range(n):
        rows = targets[p]
        l1 = syn0[inputs[p]]
        l2 = syn1[rows]  # gathered copy: scores see pre-update rows
        score = _sigmoid(l2 @ l1)
        gvec = (labels - score) * alphas[p]
        collided = np.zeros(k1, dtype=bool)
        collided[1:] = rows[1:] == rows[0]
        gvec[collided] = 0.0
        neu1e = gvec @ l2
        np.add.at(syn1, rows, np.outer(gvec, l1))
        l1 += neu1e
        ok = ~collided
        loss += -np.log(max(score[0], 1e-12))
        loss += -np.sum(np.log(np.maximum(1.0 - score[1:][ok[1:]], 1e-12)))
    return float(loss)

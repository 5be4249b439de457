"""Layer primitives with explicit forward/backward passes.

Each layer caches what its backward pass needs, accumulates parameter
gradients in place (call ``zero_grads`` between batches), and keeps every
draw from the supplied numpy Generator in a fixed order so that a seed
fully determines initialization.
"""

from __future__ import annotations

import numpy as np

from .._kernels import lstm_gates_backward, lstm_gates_forward


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def orthogonal_gates(rng: np.random.Generator, units: int, n_gates: int, dtype):
    """[units, n_gates*units] recurrent matrix, one orthogonal block per gate."""
    blocks = []
    for _ in range(n_gates):
        a = rng.normal(size=(units, units))
        q, r = np.linalg.qr(a)
        q *= np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
        blocks.append(q)
    return np.concatenate(blocks, axis=1).astype(dtype)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Dense:
    """Affine layer with linear, relu, or softmax activation."""

    def __init__(self, in_dim, units, rng, activation="linear", dtype=np.float32, name="dense"):
        if activation not in ("linear", "relu", "softmax"):
            raise ValueError(f"unknown activation {activation!r}")
        self.name = name
        self.activation = activation
        self.W = glorot_uniform(rng, in_dim, units, (in_dim, units), dtype)
        self.b = np.zeros(units, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._out = None

    def params(self):
        return {f"{self.name}.W": self.W, f"{self.name}.b": self.b}

    def grads(self):
        return {f"{self.name}.W": self.dW, f"{self.name}.b": self.db}

    def zero_grads(self):
        self.dW[:] = 0.0
        self.db[:] = 0.0

    def forward(self, x, train=False):
        self._x = x
        z = x @ self.W + self.b
        if self.activation == "relu":
            out = np.maximum(z, 0.0)
        elif self.activation == "softmax":
            out = softmax(z)
        else:
            out = z
        self._out = out
        return out

    def backward(self, dout):
        """Gradient w.r.t. the activation output (general path)."""
        if self.activation == "relu":
            dz = dout * (self._out > 0)
        elif self.activation == "softmax":
            p = self._out
            dz = p * (dout - (dout * p).sum(axis=1, keepdims=True))
        else:
            dz = dout
        return self.backward_preact(dz)

    def backward_preact(self, dz):
        """Gradient w.r.t. the pre-activation (softmax+cross-entropy shortcut)."""
        self.dW += self._x.T @ dz
        self.db += dz.sum(axis=0)
        return dz @ self.W.T


class Dropout:
    """Inverted dropout; identity outside training."""

    def __init__(self, rate, name="dropout"):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0,1), got {rate}")
        self.name = name
        self.rate = rate
        self._mask = None

    def params(self):
        return {}

    def grads(self):
        return {}

    def zero_grads(self):
        pass

    def forward(self, x, train=False, rng: np.random.Generator | None = None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout):
        if self._mask is None:
            return dout
        return dout * self._mask


class Embedding:
    """Index lookup over a trainable matrix; the PAD row (index 0) stays
    zero so padded positions contribute nothing."""

    def __init__(self, matrix: np.ndarray, trainable=True, name="embedding"):
        self.name = name
        self.W = np.ascontiguousarray(matrix)
        self.W[0] = 0.0
        self.trainable = trainable
        self.dW = np.zeros_like(self.W)
        self._ids = None

    def params(self):
        return {f"{self.name}.W": self.W}

    def grads(self):
        return {f"{self.name}.W": self.dW}

    def zero_grads(self):
        self.dW[:] = 0.0

    def forward(self, ids, train=False):
        self._ids = ids
        return self.W[ids]

    def backward(self, dout):
        if self.trainable:
            np.add.at(self.dW, self._ids, dout)
            self.dW[0] = 0.0  # keep PAD frozen at zero
        return None


class LSTM:
    """Single-direction LSTM; gate order (input, forget, candidate, output).

    Big input projection runs as one gemm over all timesteps; the
    per-timestep pointwise gate math goes through the kernel backend.
    """

    def __init__(self, in_dim, units, rng, return_sequences=False, dtype=np.float32, name="lstm"):
        self.name = name
        self.units = units
        self.return_sequences = return_sequences
        self.dtype = dtype
        self.Wx = glorot_uniform(rng, in_dim, 4 * units, (in_dim, 4 * units), dtype)
        self.Wh = orthogonal_gates(rng, units, 4, dtype)
        self.b = np.zeros(4 * units, dtype=dtype)
        self.b[units:2 * units] = 1.0  # forget-gate bias
        self.dWx = np.zeros_like(self.Wx)
        self.dWh = np.zeros_like(self.Wh)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def params(self):
        return {f"{self.name}.Wx": self.Wx, f"{self.name}.Wh": self.Wh, f"{self.name}.b": self.b}

    def grads(self):
        return {f"{self.name}.Wx": self.dWx, f"{self.name}.Wh": self.dWh, f"{self.name}.b": self.db}

    def zero_grads(self):
        self.dWx[:] = 0.0
        self.dWh[:] = 0.0
        self.db[:] = 0.0

    def forward(self, x, train=False):
        B, T, _ = x.shape
        H = self.units
        xt = np.ascontiguousarray(x.transpose(1, 0, 2))  # [T, B, in]
        xz = (xt.reshape(T * B, -1) @ self.Wx).reshape(T, B, 4 * H)
        gates = {k: np.empty((T, B, H), dtype=self.dtype) for k in "ifgoc"}
        tc = np.empty((T, B, H), dtype=self.dtype)
        h_seq = np.empty((T, B, H), dtype=self.dtype)
        h = np.zeros((B, H), dtype=self.dtype)
        c = np.zeros((B, H), dtype=self.dtype)
        for t in range(T):
            z = xz[t] + h @ self.Wh
            z += self.b
            lstm_gates_forward(
                z, c, gates["i"][t], gates["f"][t], gates["g"][t], gates["o"][t],
                gates["c"][t], tc[t], h_seq[t],
            )
            h = h_seq[t]
            c = gates["c"][t]
        self._cache = (xt, gates, tc, h_seq)
        if self.return_sequences:
            return np.ascontiguousarray(h_seq.transpose(1, 0, 2))
        return h_seq[T - 1].copy()

    def backward(self, dout):
        xt, gates, tc, h_seq = self._cache
        T, B, H = h_seq.shape
        if self.return_sequences:
            dh_seq = np.ascontiguousarray(dout.transpose(1, 0, 2))
        else:
            dh_seq = None
        zeros_bh = np.zeros((B, H), dtype=self.dtype)
        dh_next = np.zeros((B, H), dtype=self.dtype)
        dc_next = np.zeros((B, H), dtype=self.dtype)
        dc_prev = np.empty((B, H), dtype=self.dtype)
        dz = np.empty((B, 4 * H), dtype=self.dtype)
        dxt = np.empty_like(xt)
        for t in range(T - 1, -1, -1):
            if self.return_sequences:
                dh = dh_next + dh_seq[t]
            elif t == T - 1:
                dh = dh_next + np.ascontiguousarray(dout, dtype=self.dtype)
            else:
                dh = dh_next
            c_prev = gates["c"][t - 1] if t > 0 else zeros_bh
            lstm_gates_backward(
                dh, dc_next, gates["i"][t], gates["f"][t], gates["g"][t], gates["o"][t],
                c_prev, tc[t], dz, dc_prev,
            )
            h_prev = h_seq[t - 1] if t > 0 else zeros_bh
            self.dWx += xt[t].T @ dz
            self.dWh += h_prev.T @ dz
            self.db += dz.sum(axis=0)
            dxt[t] = dz @ self.Wx.T
            dh_next = dz @ self.Wh.T
            dc_next, dc_prev = dc_prev.copy(), dc_prev
        return np.ascontiguousarray(dxt.transpose(1, 0, 2))


class Bidirectional:
    """Runs one LSTM forward and one on the reversed sequence, concatenating
    features; sequence outputs are re-aligned so t indexes match."""

    def __init__(self, in_dim, units, rng, return_sequences=False, dtype=np.float32, name="bilstm"):
        self.name = name
        self.units = units
        self.return_sequences = return_sequences
        self.fwd = LSTM(in_dim, units, rng, return_sequences, dtype, name=f"{name}.fwd")
        self.bwd = LSTM(in_dim, units, rng, return_sequences, dtype, name=f"{name}.bwd")

    @property
    def out_dim(self):
        return 2 * self.units

    def params(self):
        return {**self.fwd.params(), **self.bwd.params()}

    def grads(self):
        return {**self.fwd.grads(), **self.bwd.grads()}

    def zero_grads(self):
        self.fwd.zero_grads()
        self.bwd.zero_grads()

    def forward(self, x, train=False):
        out_f = self.fwd.forward(x, train)
        out_b = self.bwd.forward(np.ascontiguousarray(x[:, ::-1]), train)
        if self.return_sequences:
            return np.concatenate([out_f, out_b[:, ::-1]], axis=2)
        return np.concatenate([out_f, out_b], axis=1)

    def backward(self, dout):
        H = self.units
        if self.return_sequences:
            df, db = dout[:, :, :H], dout[:, :, H:]
            dx_f = self.fwd.backward(np.ascontiguousarray(df))
            dx_b = self.bwd.backward(np.ascontiguousarray(db[:, ::-1]))
        else:
            df, db = dout[:, :H], dout[:, H:]
            dx_f = self.fwd.backward(np.ascontiguousarray(df))
            dx_b = self.bwd.backward(np.ascontiguousarray(db))
        return dx_f + dx_b[:, ::-1]


class Adam:
    """Adam with bias correction; epsilon sits outside the square root."""

    def __init__(self, params: dict, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-7):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict):
        from .._kernels import adam_step

        self.t += 1
        b1t = self.beta1 ** self.t
        b2t = self.beta2 ** self.t
        for name in sorted(params):
            adam_step(
                params[name].reshape(-1), grads[name].reshape(-1),
                self.m[name].reshape(-1), self.v[name].reshape(-1),
                self.lr, self.beta1, self.beta2, self.eps, b1t, b2t,
            )

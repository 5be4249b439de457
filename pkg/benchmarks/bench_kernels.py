#!/usr/bin/env python3
"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each hot kernel at training-typical sizes and prints per-call times
plus the speedup.  Invoke from the repo root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mmfnd._kernels import get_backend


def _time(fn, *args, repeat=30):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_lstm(backend, B=32, H=128, dtype=np.float32):
    rng = np.random.default_rng(0)
    z = rng.normal(size=(B, 4 * H)).astype(dtype)
    c_prev = rng.normal(size=(B, H)).astype(dtype)
    bufs = [np.empty((B, H), dtype) for _ in range(7)]
    fwd = _time(backend.lstm_gates_forward, z, c_prev, *bufs)
    i, f, g, o, c, tc, h = bufs
    dh = rng.normal(size=(B, H)).astype(dtype)
    dc = rng.normal(size=(B, H)).astype(dtype)
    dz = np.empty((B, 4 * H), dtype)
    dc_prev = np.empty((B, H), dtype)
    bwd = _time(backend.lstm_gates_backward, dh, dc, i, f, g, o, c_prev, tc, dz, dc_prev)
    return fwd, bwd


def bench_adam(backend, n=1_000_000, dtype=np.float32):
    rng = np.random.default_rng(1)
    p = rng.normal(size=n).astype(dtype)
    grad = rng.normal(size=n).astype(dtype)
    m = np.zeros(n, dtype)
    v = np.zeros(n, dtype)
    return _time(backend.adam_step, p, grad, m, v, 1e-3, 0.9, 0.999, 1e-7, 0.9, 0.999)


def bench_sgns(backend, vocab=5000, dim=300, pairs=2000, k=5):
    rng = np.random.default_rng(2)
    syn0 = ((rng.random((vocab, dim)) - 0.5) / dim).astype(np.float64)
    syn1 = np.zeros((vocab, dim), np.float64)
    inputs = rng.integers(0, vocab, pairs).astype(np.int32)
    targets = rng.integers(0, vocab, (pairs, 1 + k)).astype(np.int32)
    alphas = np.full(pairs, 0.025)
    return _time(backend.sgns_train_block, syn0, syn1, inputs, targets, alphas,
                 repeat=10)


def main():
    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = get_backend(name)
        except ImportError as exc:
            print(f"{name} backend unavailable: {exc}")
    rows = []
    for name, backend in backends.items():
        lf, lb = bench_lstm(backend)
        rows.append((name, "lstm_gates_forward  (B=32,H=128)", lf))
        rows.append((name, "lstm_gates_backward (B=32,H=128)", lb))
        rows.append((name, "adam_step           (n=1e6)", bench_adam(backend)))
        rows.append((name, "sgns_train_block    (2000 pairs, d=300)", bench_sgns(backend)))

    print(f"{'kernel':<42} {'backend':<8} {'per call':>12}")
    for name, label, t in rows:
        print(f"{label:<42} {name:<8} {t * 1e6:>10.1f} us")
    if len(backends) == 2:
        print()
        by_label = {}
        for name, label, t in rows:
            by_label.setdefault(label, {})[name] = t
        for label, times in by_label.items():
            ratio = times["python"] / times["cython"]
            print(f"{label:<42} cython is {ratio:4.1f}x python")


if __name__ == "__main__":
    main()

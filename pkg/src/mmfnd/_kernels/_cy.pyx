# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cython kernel implementations (fast backend).

Mirrors ``_py`` operation for operation; see that module for the
semantic contracts.  Gate math runs in double precision internally and
is cast back to the array dtype on store.
"""

from libc.math cimport exp, log, sqrt, tanh

import numpy as np

ctypedef fused real_t:
    float
    double


cdef inline double _sig(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def lstm_gates_forward(real_t[:, ::1] z, real_t[:, ::1] c_prev,
                       real_t[:, ::1] i, real_t[:, ::1] f, real_t[:, ::1] g,
                       real_t[:, ::1] o, real_t[:, ::1] c, real_t[:, ::1] tc,
                       real_t[:, ::1] h):
    cdef Py_ssize_t B = c_prev.shape[0], H = c_prev.shape[1]
    cdef Py_ssize_t b, k
    cdef double iv, fv, gv, ov, cv, tv
    with nogil:
        for b in range(B):
            for k in range(H):
                iv = _sig(<double> z[b, k])
                fv = _sig(<double> z[b, H + k])
                gv = tanh(<double> z[b, 2 * H + k])
                ov = _sig(<double> z[b, 3 * H + k])
                cv = fv * <double> c_prev[b, k] + iv * gv
                tv = tanh(cv)
                i[b, k] = <real_t> iv
                f[b, k] = <real_t> fv
                g[b, k] = <real_t> gv
                o[b, k] = <real_t> ov
                c[b, k] = <real_t> cv
                tc[b, k] = <real_t> tv
                h[b, k] = <real_t> (ov * tv)


def lstm_gates_backward(real_t[:, ::1] dh, real_t[:, ::1] dc,
                        real_t[:, ::1] i, real_t[:, ::1] f, real_t[:, ::1] g,
                        real_t[:, ::1] o, real_t[:, ::1] c_prev,
                        real_t[:, ::1] tc, real_t[:, ::1] dz,
                        real_t[:, ::1] dc_prev):
    cdef Py_ssize_t B = i.shape[0], H = i.shape[1]
    cdef Py_ssize_t b, k
    cdef double iv, fv, gv, ov, tv, dhv, dct, dov
    with nogil:
        for b in range(B):
            for k in range(H):
                iv = <double> i[b, k]
                fv = <double> f[b, k]
                gv = <double> g[b, k]
                ov = <double> o[b, k]
                tv = <double> tc[b, k]
                dhv = <double> dh[b, k]
                dov = dhv * tv
                dct = <double> dc[b, k] + dhv * ov * (1.0 - tv * tv)
                dz[b, k] = <real_t> ((dct * gv) * iv * (1.0 - iv))
                dz[b, H + k] = <real_t> ((dct * <double> c_prev[b, k]) * fv * (1.0 - fv))
                dz[b, 2 * H + k] = <real_t> ((dct * iv) * (1.0 - gv * gv))
                dz[b, 3 * H + k] = <real_t> (dov * ov * (1.0 - ov))
                dc_prev[b, k] = <real_t> (dct * fv)


def adam_step(real_t[::1] p, real_t[::1] grad, real_t[::1] m, real_t[::1] v,
              double lr, double beta1, double beta2, double eps,
              double b1t, double b2t):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k
    cdef double mv, vv, gv
    with nogil:
        for k in range(n):
            gv = <double> grad[k]
            mv = beta1 * <double> m[k] + (1.0 - beta1) * gv
            vv = beta2 * <double> v[k] + (1.0 - beta2) * gv * gv
            m[k] = <real_t> mv
            v[k] = <real_t> vv
            p[k] = <real_t> (<double> p[k]
                             - lr * (mv / (1.0 - b1t)) / (sqrt(vv / (1.0 - b2t)) + eps))


def sgns_train_block(double[:, ::1] syn0, double[:, ::1] syn1,
                     int[::1] inputs, int[:, ::1] targets, double[::1] alphas):
    cdef Py_ssize_t n = targets.shape[0], k1 = targets.shape[1], D = syn0.shape[1]
    cdef double[::1] gbuf = np.empty(k1, dtype=np.float64)
    cdef double[::1] neu1e = np.empty(D, dtype=np.float64)
    cdef Py_ssize_t p, j, d
    cdef int inp, row, pos
    cdef double s, fv, loss = 0.0, a
    with nogil:
        for p in range(n):
            inp = inputs[p]
            pos = targets[p, 0]
            a = alphas[p]
            for d in range(D):
                neu1e[d] = 0.0
            # pass 1: scores against pre-update rows, accumulate input grad
            for j in range(k1):
                row = targets[p, j]
                if j > 0 and row == pos:
                    gbuf[j] = 0.0
                    continue
                s = 0.0
                for d in range(D):
                    s += syn0[inp, d] * syn1[row, d]
                fv = _sig(s)
                if j == 0:
                    gbuf[j] = (1.0 - fv) * a
                    loss += -log(fv if fv > 1e-12 else 1e-12)
                else:
                    gbuf[j] = -fv * a
                    s = 1.0 - fv
                    loss += -log(s if s > 1e-12 else 1e-12)
                for d in range(D):
                    neu1e[d] += gbuf[j] * syn1[row, d]
            # pass 2: apply context/negative updates, then the input row
            for j in range(k1):
                row = targets[p, j]
                if j > 0 and row == pos:
                    continue
                for d in range(D):
                    syn1[row, d] += gbuf[j] * syn0[inp, d]
            for d in range(D):
                syn0[inp, d] += neu1e[d]
    return loss

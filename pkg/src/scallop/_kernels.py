"""Compiled inner loop for scoring repeated subsequences."""

import numpy as np
from numba import njit


@njit(cache=True)
def _matmul(a, b, out):
    d = a.shape[0]
    for i in range(d):
        for j in range(d):
            acc = 0j
            for k in range(d):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc


@njit(cache=True)
def _power(u, r, tmp, res, base):
    d = u.shape[0]
    for i in range(d):
        for j in range(d):
            res[i, j] = 1.0 if i == j else 0.0
            base[i, j] = u[i, j]
    while r > 0:
        if r & 1:
            _matmul(base, res, tmp)
            res[:, :] = tmp
        r >>= 1
        if r:
            _matmul(base, base, tmp)
            base[:, :] = tmp
    return res


@njit(cache=True)
def repeated_fidelity_kernel(bits, angles, eigvals, eigvecs, free, repetitions, states, targets):
    """Fidelity table (B, T) for rows of ``bits`` at tip angles ``angles``.

    ``states``/``targets`` are the six cardinal states and their images under
    the target gate (both 2-component); the kick is
    ``V diag(exp(-i w theta / 2)) V^dagger``.
    """
    nb, nt = angles.shape
    n = bits.shape[1]
    d = free.shape[0]
    out = np.empty((nb, nt))
    kick = np.empty((d, d), dtype=np.complex128)
    pulsed = np.empty((d, d), dtype=np.complex128)
    u = np.empty((d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    res = np.empty((d, d), dtype=np.complex128)
    base = np.empty((d, d), dtype=np.complex128)
    vconj = np.conj(eigvecs)
    for b in range(nb):
        for t in range(nt):
            theta = angles[b, t]
            for i in range(d):
                for j in range(d):
                    acc = 0j
                    for k in range(d):
                        acc += eigvecs[i, k] * np.exp(-0.5j * theta * eigvals[k]) * vconj[j, k]
                    kick[i, j] = acc
            for i in range(d):
                for j in range(d):
                    pulsed[i, j] = free[i] * kick[i, j]
                    u[i, j] = 1.0 if i == j else 0.0
            for s in range(n):
                if bits[b, s]:
                    _matmul(pulsed, u, tmp)
                    u[:, :] = tmp
                else:
                    for i in range(d):
                        for j in range(d):
                            u[i, j] *= free[i]
            g = _power(u, repetitions, tmp, res, base) if repetitions > 1 else u
            total = 0.0
            for a in range(states.shape[0]):
                ov = 0j
                for i in range(2):
                    ui = g[i, 0] * states[a, 0] + g[i, 1] * states[a, 1]
                    ov += np.conj(targets[a, i]) * ui
                total += ov.real * ov.real + ov.imag * ov.imag
            out[b, t] = total / states.shape[0]
    return out

"""Compiled SC / SCL inner loops.

Layout: the LLRs of the active node at depth ``d`` (size ``N >> d``) live at
``offset(d) = 2N - 2 (N >> d)`` in a flat buffer of length ``2N``.  Input LLRs
are expected in bit-reversed order so that the decoding tree is the plain
``[v1 ^ v2, v2]`` recursion.
"""
import math

import numba
import numpy as np


@numba.njit(inline="always")
def f_minsum(a, b):
    m = min(abs(a), abs(b))
    if (a < 0) != (b < 0):
        return -m
    return m


@numba.njit(inline="always")
def f_exact(a, b):
    # 2 atanh(tanh(a/2) tanh(b/2)) in a form that never overflows
    m = min(abs(a), abs(b))
    s = -m if (a < 0) != (b < 0) else m
    return s + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


@numba.njit(inline="always")
def _f(a, b, exact):
    if exact:
        return f_exact(a, b)
    return f_minsum(a, b)


@numba.njit(inline="always")
def _ctz(i):
    t = 0
    while (i & 1) == 0:
        i >>= 1
        t += 1
    return t


@numba.njit(inline="always")
def _descend(alpha, left, i, n, N, exact):
    """Fill LLRs down to leaf ``i`` starting from the lowest common ancestor with ``i - 1``."""
    if i == 0:
        d0 = 0
    else:
        d0 = n - _ctz(i) - 1
        s = N >> (d0 + 1)
        po = 2 * N - 2 * (N >> d0)
        co = 2 * N - 2 * s
        for j in range(s):
            a = alpha[po + j]
            if left[co + j]:
                a = -a
            alpha[co + j] = a + alpha[po + j + s]
        d0 += 1
    for d in range(d0, n):
        s = N >> (d + 1)
        po = 2 * N - 2 * (N >> d)
        co = 2 * N - 2 * s
        for j in range(s):
            alpha[co + j] = _f(alpha[po + j], alpha[po + j + s], exact)


@numba.njit(inline="always")
def _ascend(left, tmp, i, bit, n, N):
    """Propagate decided bit ``i`` into the stored left-sibling codewords."""
    d = n
    tmp[2 * N - 2] = bit
    while d > 0 and (i >> (n - d)) & 1:
        s = N >> d
        co = 2 * N - 2 * s
        po = 2 * N - 4 * s
        for j in range(s):
            r = tmp[co + j]
            tmp[po + j] = left[co + j] ^ r
            tmp[po + s + j] = r
        d -= 1
    if d > 0:
        s = N >> d
        co = 2 * N - 2 * s
        for j in range(s):
            left[co + j] = tmp[co + j]


@numba.njit(cache=True)
def sc_kernel(llr_rev, frozen, offsets, exact):
    N = llr_rev.shape[0]
    n = 0
    while (1 << n) < N:
        n += 1
    alpha = np.empty(2 * N)
    left = np.zeros(2 * N, dtype=np.uint8)
    tmp = np.zeros(2 * N, dtype=np.uint8)
    alpha[:N] = llr_rev
    u = np.zeros(N, dtype=np.uint8)
    dec = np.empty(N)
    for i in range(N):
        _descend(alpha, left, i, n, N, exact)
        L = alpha[2 * N - 2] + offsets[i]
        dec[i] = L
        b = 0
        if not frozen[i] and L < 0:
            b = 1
        u[i] = b
        _ascend(left, tmp, i, b, n, N)
    return u, dec


@numba.njit(cache=True)
def scl_kernel(llr_rev, frozen, list_size, exact):
    """LLR-based SCL.  Returns (u, metrics) for the surviving paths in path order."""
    N = llr_rev.shape[0]
    n = 0
    while (1 << n) < N:
        n += 1
    Lmax = list_size
    alpha = np.empty((Lmax, 2 * N))
    left = np.zeros((Lmax, 2 * N), dtype=np.uint8)
    tmp = np.zeros((Lmax, 2 * N), dtype=np.uint8)
    u = np.zeros((Lmax, N), dtype=np.uint8)
    pm = np.zeros(Lmax)
    order = np.empty(Lmax, dtype=np.int64)   # slot of the k-th path
    order[0] = 0
    nact = 1
    alpha[0, :N] = llr_rev
    leaf = 2 * N - 2
    llrs = np.empty(Lmax)
    cand_pm = np.empty(2 * Lmax)
    new_order = np.empty(Lmax, dtype=np.int64)
    new_bits = np.empty(Lmax, dtype=np.uint8)
    keep = np.zeros(2 * Lmax, dtype=np.bool_)
    used = np.zeros(Lmax, dtype=np.bool_)
    for i in range(N):
        for k in range(nact):
            p = order[k]
            _descend(alpha[p], left[p], i, n, N, exact)
            llrs[k] = alpha[p, leaf]
        if frozen[i]:
            for k in range(nact):
                p = order[k]
                if llrs[k] < 0:
                    pm[p] += -llrs[k]
                u[p, i] = 0
                _ascend(left[p], tmp[p], i, 0, n, N)
            continue
        ncand = 2 * nact
        for k in range(nact):
            p = order[k]
            L = llrs[k]
            cand_pm[2 * k] = pm[p] + (-L if L < 0 else 0.0)
            cand_pm[2 * k + 1] = pm[p] + (L if L > 0 else 0.0)
        keep[:ncand] = False
        if ncand <= Lmax:
            keep[:ncand] = True
        else:
            idx = np.argsort(cand_pm[:ncand], kind="mergesort")
            for r in range(Lmax):
                keep[idx[r]] = True
        # slots of paths that lose both children become free
        used[:] = False
        for k in range(nact):
            if keep[2 * k] or keep[2 * k + 1]:
                used[order[k]] = True
        free_ptr = 0
        m = 0
        for c in range(ncand):
            if not keep[c]:
                continue
            k = c // 2
            p = order[k]
            b = c % 2
            if b == 1 and keep[c - 1]:
                # both children survive: clone into a free slot
                while used[free_ptr]:
                    free_ptr += 1
                q = free_ptr
                used[q] = True
                alpha[q, :] = alpha[p, :]
                left[q, :] = left[p, :]
                tmp[q, :] = tmp[p, :]
                u[q, :] = u[p, :]
                pm[q] = pm[p]
                p = q
            new_order[m] = p
            new_bits[m] = b
            m += 1
        for r in range(m):
            p = new_order[r]
            b = new_bits[r]
            order[r] = p
            u[p, i] = b
        # metrics follow the candidate order (clone shares its parent's base metric)
        m = 0
        for c in range(ncand):
            if keep[c]:
                pm[order[m]] = cand_pm[c]
                m += 1
        nact = m
        for r in range(nact):
            p = order[r]
            _ascend(left[p], tmp[p], i, u[p, i], n, N)
    out_u = np.empty((nact, N), dtype=np.uint8)
    out_pm = np.empty(nact)
    for r in range(nact):
        out_u[r] = u[order[r]]
        out_pm[r] = pm[order[r]]
    return out_u, out_pm


# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cyclic Jacobi eigensolver and pairwise-distance scan.

The pure-Python twins live in :mod:`radbound._pycore` and must return the
same values up to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def jacobi_eigh(double[:, ::1] a_in, double tol_rel=1e-13, int max_sweeps=100,
                bint want_vectors=True):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues in
    diagonal order (unsorted). ``sweeps`` is -1 when the sweep cap was hit
    before the off-diagonal norm dropped below ``tol_rel * ||a||_F``.
    """
    cdef Py_ssize_t n = a_in.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v_arr
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v
    cdef Py_ssize_t p, q, r
    cdef int sweep
    cdef double frob = 0.0, off, target, skip
    cdef double apq, theta, t, c, s, tau, g, h

    if want_vectors:
        v_arr = np.eye(n, dtype=np.float64)
    else:
        v_arr = np.zeros((0, 0), dtype=np.float64)
    v = v_arr

    with nogil:
        for p in range(n):
            for q in range(n):
                frob += a[p, q] * a[p, q]
        frob = sqrt(frob)
        target = tol_rel * frob
        # entries below this cannot lift the off-norm above target
        skip = target / (n if n > 0 else 1)

        sweep = 0
        while True:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += a[p, q] * a[p, q]
            off = sqrt(2.0 * off)
            if off <= target:
                break
            if sweep >= max_sweeps:
                sweep = -1
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if fabs(apq) <= skip:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    a[p, p] -= t * apq
                    a[q, q] += t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        if r == p or r == q:
                            continue
                        g = a[p, r]
                        h = a[q, r]
                        a[p, r] = g - s * (h + g * tau)
                        a[r, p] = a[p, r]
                        a[q, r] = h + s * (g - h * tau)
                        a[r, q] = a[q, r]
                    if want_vectors:
                        # v holds eigenvectors as rows so both updates are contiguous
                        for r in range(n):
                            g = v[p, r]
                            h = v[q, r]
                            v[p, r] = g - s * (h + g * tau)
                            v[q, r] = h + s * (g - h * tau)

    w = np.array([a_arr[i, i] for i in range(n)], dtype=np.float64)
    return w, (np.ascontiguousarray(v_arr.T) if want_vectors else None), sweep


def min_sq_distance(double[:, ::1] x):
    """Smallest squared Euclidean distance between two distinct rows."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double best = 1.0 / 0.0, acc, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = x[i, k] - x[j, k]
                    acc += diff * diff
                    if acc >= best:
                        break
                if acc < best:
                    best = acc
    return best

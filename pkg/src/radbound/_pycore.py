"""Pure-Python fallback for the kernels in ``_core.pyx``.

Same algorithms, same rotation order; numpy is used only for row-wise
vector updates inside each rotation.
"""
import math

import numpy as np


def jacobi_eigh(a_in, tol_rel=1e-13, max_sweeps=100, want_vectors=True):
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n) if want_vectors else None
    frob = math.sqrt(float(np.sum(a * a)))
    target = tol_rel * frob
    skip = target / max(n, 1)
    iu = np.triu_indices(n, 1)

    sweep = 0
    while True:
        off = math.sqrt(2.0 * float(np.sum(a[iu] ** 2)))
        if off <= target:
            break
        if sweep >= max_sweeps:
            sweep = -1
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                app = a[p, p] - t * apq
                aqq = a[q, q] + t * apq
                g = a[p].copy()
                h = a[q].copy()
                new_p = g - s * (h + g * tau)
                new_q = h + s * (g - h * tau)
                a[p, :] = new_p
                a[:, p] = new_p
                a[q, :] = new_q
                a[:, q] = new_q
                a[p, p] = app
                a[q, q] = aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                if v is not None:
                    g = v[p].copy()
                    h = v[q].copy()
                    v[p] = g - s * (h + g * tau)
                    v[q] = h + s * (g - h * tau)

    w = np.diag(a).copy()
    return w, (np.ascontiguousarray(v.T) if v is not None else None), sweep


def min_sq_distance(x):
    x = np.asarray(x, dtype=np.float64)
    best = math.inf
    # one row against all later rows keeps memory at O(n d)
    for i in range(x.shape[0] - 1):
        diff = x[i + 1:] - x[i]
        best = min(best, float(np.min(np.einsum("ij,ij->i", diff, diff))))
    return best

"""Pure-Python cyclic Jacobi eigensolver (same rotations as the compiled kernel)."""
import math

import numpy as np


def jacobi_eigh(a_in, tol=1e-12, max_sweeps=100, want_vectors=True):
    a = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(a)
    thresh = tol * max(fro, 1.0)
    off_mask = ~np.eye(n, dtype=bool)
    done = -1
    for sweep in range(max_sweeps + 1):
        if math.sqrt(float(np.sum(np.abs(a[off_mask]) ** 2))) <= thresh:
            done = sweep
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                absb = abs(b)
                if absb == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * absb)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                e = b / absb
                ec = e.conjugate()
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * ec * colq
                a[:, q] = s * colp + c * ec * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * e * rowq
                a[q, :] = s * rowp + c * e * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * absb
                a[q, q] = aqq + t * absb
                if want_vectors:
                    vp = v[:, p].copy()
                    vq = v[:, q]
                    v[:, p] = c * vp - s * ec * vq
                    v[:, q] = s * vp + c * ec * vq
    return a.diagonal().real.copy(), (v if want_vectors else None), done

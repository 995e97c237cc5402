# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cyclic Jacobi eigensolver for dense complex Hermitian matrices."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef double off_norm(double complex[:, ::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                s += cabs2(a[i, j])
    return sqrt(s)


def jacobi_eigh(a_in, double tol=1e-12, int max_sweeps=100, bint want_vectors=True):
    """Diagonalise a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues unsorted
    (diagonal order) and eigenvectors as columns; ``eigenvectors`` is None when
    ``want_vectors`` is false. ``sweeps`` is -1 if the iteration did not
    converge within ``max_sweeps``.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] a = arr
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] v = varr
    cdef Py_ssize_t p, q, k
    cdef int sweep, done = -1
    cdef double absb, app, aqq, tau, t, c, s, fro, thresh
    cdef double complex e, ec, akp, akq, apk, aqk

    fro = 0.0
    for p in range(n):
        for q in range(n):
            fro += cabs2(a[p, q])
    fro = sqrt(fro)
    thresh = tol * (fro if fro > 1.0 else 1.0)

    with nogil:
        for sweep in range(max_sweeps + 1):
            if off_norm(a, n) <= thresh:
                done = sweep
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    absb = sqrt(cabs2(a[p, q]))
                    if absb == 0.0:
                        continue
                    app = a[p, p].real
                    aqq = a[q, q].real
                    tau = (aqq - app) / (2.0 * absb)
                    if tau >= 0.0:
                        t = 1.0 / (tau + hypot(1.0, tau))
                    else:
                        t = -1.0 / (-tau + hypot(1.0, tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    e = a[p, q] / absb
                    ec = e.conjugate()
                    # columns: A <- A V with V = [[c, s], [-s conj(e), c conj(e)]]
                    for k in range(n):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * ec * akq
                        a[k, q] = s * akp + c * ec * akq
                    # rows: A <- V^H A
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = c * apk - s * e * aqk
                        a[q, k] = s * apk + c * e * aqk
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = app - t * absb
                    a[q, q] = aqq + t * absb
                    if want_vectors:
                        for k in range(n):
                            akp = v[k, p]
                            akq = v[k, q]
                            v[k, p] = c * akp - s * ec * akq
                            v[k, q] = s * akp + c * ec * akq

    w = np.empty(n, dtype=np.float64)
    for p in range(n):
        w[p] = a[p, p].real
    return w, (varr if want_vectors else None), done

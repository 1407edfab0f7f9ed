# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels for the univariate-Gaussian manifold.

Hot path of the whole package: these functions run inside the objective
loops of the fitting routines. Inputs are assumed validated (finite,
positive standard deviations); validation lives in the public API layers.
Pure-Python equivalents are in ``_core_py``.
"""

from libc.math cimport atanh, sqrt


cdef double SQRT2 = 1.4142135623730951
# atanh argument cap: the closed-form ratio is < 1 for positive sigmas, but
# rounding can push it to 1.0 exactly, which would return inf.
cdef double DELTA_CAP = 1.0 - 1e-15


cdef inline double _rao(double mu1, double s1, double mu2, double s2) nogil:
    cdef double dmu2 = (mu1 - mu2) * (mu1 - mu2)
    cdef double dm = s1 - s2
    cdef double dp = s1 + s2
    cdef double num = dmu2 + 2.0 * dm * dm
    cdef double delta
    if num == 0.0:
        return 0.0
    delta = sqrt(num / (dmu2 + 2.0 * dp * dp))
    if delta > DELTA_CAP:
        delta = DELTA_CAP
    return 2.0 * SQRT2 * atanh(delta)


def rao_distance_many(double[::1] mu1, double[::1] s1,
                      double[::1] mu2, double[::1] s2,
                      double[::1] out):
    """Elementwise geodesic distances between two arrays of Gaussians."""
    cdef Py_ssize_t n = mu1.shape[0]
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _rao(mu1[i], s1[i], mu2[i], s2[i])


def sum_sq_rao(double[::1] mu1, double[::1] s1,
               double[::1] mu2, double[::1] s2):
    """Sum of squared geodesic distances, compensated (Kahan) summation.

    Compensated summation keeps the result independent of any internal
    evaluation order, so objective values are reproducible bit-for-bit.
    """
    cdef Py_ssize_t n = mu1.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    cdef double comp = 0.0
    cdef double gd, term, tmp
    with nogil:
        for i in range(n):
            gd = _rao(mu1[i], s1[i], mu2[i], s2[i])
            term = gd * gd - comp
            tmp = acc + term
            comp = (tmp - acc) - term
            acc = tmp
    return acc

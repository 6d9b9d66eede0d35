# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Huygens-Fresnel summation for a line aperture (2D)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "hfcore.h":
    void hf_line_sum_c(const double *yp, const double *wre, const double *wim, Py_ssize_t n,
                       const double *ry, const double *rz, Py_ssize_t nl, double k,
                       Py_ssize_t block, double *out_re, double *out_im) nogil


def hf_line_sum(const double[::1] yp, const double[::1] wre, const double[::1] wim,
                const double[::1] ry, const double[::1] rz, double k, Py_ssize_t block=4096):
    """Sum ``w_m exp(-j k (rho_m - rz)) / sqrt(rho_m)`` for every lens point.

    The common factor ``exp(-j k rz)`` is left to the caller. The GIL is
    released, so callers may split lens points across threads.
    """
    cdef Py_ssize_t n = yp.shape[0]
    cdef Py_ssize_t nl = ry.shape[0]
    if wre.shape[0] != n or wim.shape[0] != n or rz.shape[0] != nl:
        raise ValueError("array lengths do not match")
    out_re = np.zeros(nl, dtype=np.float64)
    out_im = np.zeros(nl, dtype=np.float64)
    cdef double[::1] ore = out_re
    cdef double[::1] oim = out_im
    if n == 0 or nl == 0:
        return out_re, out_im
    with nogil:
        hf_line_sum_c(&yp[0], &wre[0], &wim[0], n, &ry[0], &rz[0], nl, k, block,
                      &ore[0], &oim[0])
    return out_re, out_im

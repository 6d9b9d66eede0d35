"""Numpy implementation of the Huygens-Fresnel line summation."""
import numpy as np


def hf_line_sum(yp, wre, wim, ry, rz, k, block=4096, lens_chunk=64):
    """Same contract as the compiled kernel: returns ``(real, imag)`` of
    ``sum_m w_m exp(-j k (rho_m - rz)) / sqrt(rho_m)`` per lens point."""
    yp = np.ascontiguousarray(yp, dtype=float)
    w = np.asarray(wre, dtype=float) + 1j * np.asarray(wim, dtype=float)
    ry = np.asarray(ry, dtype=float)
    rz = np.asarray(rz, dtype=float)
    out = np.zeros(ry.size, dtype=complex)
    for i0 in range(0, ry.size, lens_chunk):
        sl = slice(i0, i0 + lens_chunk)
        ryc = ry[sl, None]
        rzc = rz[sl, None]
        acc = np.zeros(ryc.shape[0], dtype=complex)
        for m0 in range(0, yp.size, block):
            dy = ryc - yp[None, m0:m0 + block]
            d2 = dy * dy
            rho = np.sqrt(d2 + rzc * rzc)
            ph = k * (d2 / (rho + rzc))
            terms = w[None, m0:m0 + block] * np.exp(-1j * ph) / np.sqrt(rho)
            acc += terms.sum(axis=1)
        out[sl] = acc
    return out.real.copy(), out.imag.copy()

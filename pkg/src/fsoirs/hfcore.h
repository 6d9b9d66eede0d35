/* Huygens-Fresnel line summation kernel.
 *
 * For each lens point (ry, rz) computes
 *     sum_m w_m exp(-j k (rho_m - rz)) / sqrt(rho_m),
 *     rho_m = sqrt((ry - yp_m)^2 + rz^2).
 * Aperture samples are processed in fixed blocks whose partial sums are
 * added in order, so results are independent of how lens points are split.
 *
 * sin/cos use a Cody-Waite reduction and the fdlibm kernel polynomials so
 * the inner loop vectorizes. The reduction is accurate for phases below
 * PHASE_MAX; blocks that may exceed it fall back to libm.
 */
#ifndef FSOIRS_HFCORE_H
#define FSOIRS_HFCORE_H

#include <math.h>
#include <stddef.h>

#define PHASE_MAX 1.0e6

static const double INV_PIO2 = 6.36619772367581382433e-01;
static const double PIO2_1 = 1.57079632673412561417e+00;
static const double PIO2_2 = 6.07710050630396597660e-11;
static const double PIO2_3 = 2.02226624871116645580e-21;

static inline void poly_sincos(double x, double *s_out, double *c_out)
{
    double nf = floor(x * INV_PIO2 + 0.5);
    double r = ((x - nf * PIO2_1) - nf * PIO2_2) - nf * PIO2_3;
    double z = r * r;
    double sp = r + r * z * (-1.66666666666666324348e-01 + z * (8.33333333332248946124e-03
                + z * (-1.98412698298579493134e-04 + z * (2.75573137070700676789e-06
                + z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
    double cp = 1.0 - 0.5 * z + z * z * (4.16666666666666019037e-02 + z * (-1.38888888888741095749e-03
                + z * (2.48015872894767294178e-05 + z * (-2.75573143513906633035e-07
                + z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));
    double qf = nf - 4.0 * floor(nf * 0.25);          /* quadrant in {0,1,2,3} */
    double odd = qf - 2.0 * floor(qf * 0.5);
    double s = odd != 0.0 ? cp : sp;
    double c = odd != 0.0 ? sp : cp;
    s = qf >= 2.0 ? -s : s;
    c = (qf == 1.0 || qf == 2.0) ? -c : c;
    *s_out = s;
    *c_out = c;
}

static void hf_line_sum_c(const double *yp, const double *wre, const double *wim, ptrdiff_t n,
                          const double *ry, const double *rz, ptrdiff_t nl, double k,
                          ptrdiff_t block, double *out_re, double *out_im)
{
    for (ptrdiff_t i = 0; i < nl; ++i) {
        const double y0 = ry[i], z0 = rz[i], z2 = z0 * z0;
        double acc_re = 0.0, acc_im = 0.0;
        for (ptrdiff_t start = 0; start < n; start += block) {
            ptrdiff_t stop = start + block < n ? start + block : n;
            double b_re = 0.0, b_im = 0.0;
            /* Largest phase in the block: the farthest sample from y0. */
            double e1 = fabs(y0 - yp[start]), e2 = fabs(y0 - yp[stop - 1]);
            double dmax = e1 > e2 ? e1 : e2;
            int fast = k * dmax * dmax / (2.0 * fabs(z0) + 1e-300) < PHASE_MAX;
            if (fast) {
#pragma omp simd reduction(+:b_re, b_im)
                for (ptrdiff_t m = start; m < stop; ++m) {
                    double dy = y0 - yp[m];
                    double d2 = dy * dy;
                    double rho = sqrt(d2 + z2);
                    double s, c;
                    poly_sincos(k * (d2 / (rho + z0)), &s, &c);
                    double g = 1.0 / sqrt(rho);
                    b_re += (wre[m] * c + wim[m] * s) * g;
                    b_im += (wim[m] * c - wre[m] * s) * g;
                }
            } else {
                for (ptrdiff_t m = start; m < stop; ++m) {
                    double dy = y0 - yp[m];
                    double d2 = dy * dy;
                    double rho = sqrt(d2 + z2);
                    double ph = k * (d2 / (rho + z0));
                    double c = cos(ph), s = sin(ph);
                    double g = 1.0 / sqrt(rho);
                    b_re += (wre[m] * c + wim[m] * s) * g;
                    b_im += (wim[m] * c - wre[m] * s) * g;
                }
            }
            acc_re += b_re;
            acc_im += b_im;
        }
        out_re[i] = acc_re;
        out_im[i] = acc_im;
    }
}

#endif

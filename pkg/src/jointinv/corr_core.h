/* Register-blocked correlation micro-kernels (GCC/Clang vector extensions).
 *
 * Rows are flattened zero-padded planes; a kernel tap is a constant offset
 * into a row. Loop orders are fixed so results are bit-reproducible.
 */
#ifndef JOINTINV_CORR_CORE_H
#define JOINTINV_CORR_CORE_H

#include <stddef.h>
#include <string.h>

typedef double v4d __attribute__((vector_size(32)));

static inline v4d jl_load(const double *p) { v4d v; memcpy(&v, p, sizeof v); return v; }
static inline void jl_store(double *p, v4d v) { memcpy(p, &v, sizeof v); }
static inline v4d jl_splat(double x) { v4d v = {x, x, x, x}; return v; }

/* out[n, co, p] = sum_{ci, t} k[co, ci, t] * src[n, ci, p + off[t]],
 * p in [0, length), length % 8 == 0. src rows have L doubles. */
static void jl_correlate(const double *src, const double *k, const ptrdiff_t *off,
                         double *out, ptrdiff_t N, ptrdiff_t Ci, ptrdiff_t Co,
                         ptrdiff_t T, ptrdiff_t L, ptrdiff_t length)
{
    const ptrdiff_t kstride = Ci * T;
    for (ptrdiff_t n = 0; n < N; n++) {
        const double *sn = src + n * Ci * L;
        double *on = out + n * Co * length;
        ptrdiff_t co = 0;
        for (; co + 4 <= Co; co += 4) {
            const double *k0 = k + co * kstride;
            ptrdiff_t p = 0;
            for (; p + 16 <= length; p += 16) {
                v4d acc[16];
                for (int i = 0; i < 16; i++) acc[i] = jl_splat(0);
                for (ptrdiff_t ci = 0; ci < Ci; ci++) {
                    const double *s = sn + ci * L + p;
                    const double *kc = k0 + ci * T;
                    for (ptrdiff_t t = 0; t < T; t++) {
                        const double *st = s + off[t];
                        v4d x0 = jl_load(st), x1 = jl_load(st + 4);
                        v4d x2 = jl_load(st + 8), x3 = jl_load(st + 12);
                        for (int c = 0; c < 4; c++) {
                            v4d w = jl_splat(kc[c * kstride + t]);
                            acc[4 * c] += w * x0;
                            acc[4 * c + 1] += w * x1;
                            acc[4 * c + 2] += w * x2;
                            acc[4 * c + 3] += w * x3;
                        }
                    }
                }
                for (int c = 0; c < 4; c++) {
                    double *o = on + (co + c) * length + p;
                    jl_store(o, acc[4 * c]);
                    jl_store(o + 4, acc[4 * c + 1]);
                    jl_store(o + 8, acc[4 * c + 2]);
                    jl_store(o + 12, acc[4 * c + 3]);
                }
            }
            for (; p < length; p += 8) {
                v4d a0 = jl_splat(0), b0 = jl_splat(0), a1 = jl_splat(0), b1 = jl_splat(0);
                v4d a2 = jl_splat(0), b2 = jl_splat(0), a3 = jl_splat(0), b3 = jl_splat(0);
                for (ptrdiff_t ci = 0; ci < Ci; ci++) {
                    const double *s = sn + ci * L + p;
                    const double *kc = k0 + ci * T;
                    for (ptrdiff_t t = 0; t < T; t++) {
                        const double *st = s + off[t];
                        v4d x0 = jl_load(st), x1 = jl_load(st + 4);
                        v4d w;
                        w = jl_splat(kc[t]);               a0 += w * x0; b0 += w * x1;
                        w = jl_splat(kc[kstride + t]);     a1 += w * x0; b1 += w * x1;
                        w = jl_splat(kc[2 * kstride + t]); a2 += w * x0; b2 += w * x1;
                        w = jl_splat(kc[3 * kstride + t]); a3 += w * x0; b3 += w * x1;
                    }
                }
                double *o = on + co * length + p;
                jl_store(o, a0);              jl_store(o + 4, b0);
                jl_store(o + length, a1);     jl_store(o + length + 4, b1);
                jl_store(o + 2 * length, a2); jl_store(o + 2 * length + 4, b2);
                jl_store(o + 3 * length, a3); jl_store(o + 3 * length + 4, b3);
            }
        }
        for (; co < Co; co++) {
            const double *kc0 = k + co * kstride;
            for (ptrdiff_t p = 0; p < length; p += 8) {
                v4d a = jl_splat(0), b = jl_splat(0);
                for (ptrdiff_t ci = 0; ci < Ci; ci++) {
                    const double *s = sn + ci * L + p;
                    const double *kc = kc0 + ci * T;
                    for (ptrdiff_t t = 0; t < T; t++) {
                        const double *st = s + off[t];
                        v4d w = jl_splat(kc[t]);
                        a += w * jl_load(st);
                        b += w * jl_load(st + 4);
                    }
                }
                double *o = on + co * length + p;
                jl_store(o, a);
                jl_store(o + 4, b);
            }
        }
    }
}

/* part[co, ci, t, 0:4] += lane-wise sum_{n, p} g[n, co, p] * src[n, ci, p + off[t]]
 * length % 4 == 0. Callers reduce the 4 lanes in a fixed order. */
static void jl_weight_grad(const double *g, const double *src, const ptrdiff_t *off,
                           double *part, ptrdiff_t N, ptrdiff_t Ci, ptrdiff_t Co,
                           ptrdiff_t T, ptrdiff_t L, ptrdiff_t length)
{
    for (ptrdiff_t n = 0; n < N; n++) {
        for (ptrdiff_t ci = 0; ci < Ci; ci++) {
            const double *s = src + (n * Ci + ci) * L;
            ptrdiff_t co = 0;
            for (; co + 4 <= Co; co += 4) {
                const double *g0 = g + (n * Co + co) * length;
                const double *g1 = g0 + length, *g2 = g1 + length, *g3 = g2 + length;
                ptrdiff_t t = 0;
                for (; t + 3 <= T; t += 3) {
                    const double *s0 = s + off[t], *s1 = s + off[t + 1], *s2 = s + off[t + 2];
                    v4d acc[12];
                    for (int i = 0; i < 12; i++) acc[i] = jl_splat(0);
                    for (ptrdiff_t p = 0; p < length; p += 4) {
                        v4d x0 = jl_load(s0 + p), x1 = jl_load(s1 + p), x2 = jl_load(s2 + p);
                        v4d h;
                        h = jl_load(g0 + p); acc[0] += h * x0; acc[1] += h * x1; acc[2] += h * x2;
                        h = jl_load(g1 + p); acc[3] += h * x0; acc[4] += h * x1; acc[5] += h * x2;
                        h = jl_load(g2 + p); acc[6] += h * x0; acc[7] += h * x1; acc[8] += h * x2;
                        h = jl_load(g3 + p); acc[9] += h * x0; acc[10] += h * x1; acc[11] += h * x2;
                    }
                    for (int c = 0; c < 4; c++)
                        for (int j = 0; j < 3; j++) {
                            double *dst = part + (((co + c) * Ci + ci) * T + t + j) * 4;
                            jl_store(dst, jl_load(dst) + acc[3 * c + j]);
                        }
                }
                for (; t < T; t++) {
                    const double *s0 = s + off[t];
                    v4d a0 = jl_splat(0), a1 = jl_splat(0), a2 = jl_splat(0), a3 = jl_splat(0);
                    for (ptrdiff_t p = 0; p < length; p += 4) {
                        v4d x0 = jl_load(s0 + p);
                        a0 += jl_load(g0 + p) * x0;
                        a1 += jl_load(g1 + p) * x0;
                        a2 += jl_load(g2 + p) * x0;
                        a3 += jl_load(g3 + p) * x0;
                    }
                    v4d r[4] = {a0, a1, a2, a3};
                    for (int c = 0; c < 4; c++) {
                        double *dst = part + (((co + c) * Ci + ci) * T + t) * 4;
                        jl_store(dst, jl_load(dst) + r[c]);
                    }
                }
            }
            for (; co < Co; co++) {
                const double *g0 = g + (n * Co + co) * length;
                for (ptrdiff_t t = 0; t < T; t++) {
                    const double *s0 = s + off[t];
                    v4d a = jl_splat(0);
                    for (ptrdiff_t p = 0; p < length; p += 4)
                        a += jl_load(g0 + p) * jl_load(s0 + p);
                    double *dst = part + ((co * Ci + ci) * T + t) * 4;
                    jl_store(dst, jl_load(dst) + a);
                }
            }
        }
    }
}

#endif

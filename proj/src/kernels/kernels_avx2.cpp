#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstring>

#include "oneshot/kernels.hpp"
#include "tanh_detail.hpp"

namespace oneshot::kernels::avx2 {

void axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

}  // namespace

double dot(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void affine(std::size_t n, double a, double b, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vb));
    for (; i < n; ++i) y[i] = a * x[i] + b;
}

namespace {

__m256d tanh4(__m256d x) {
    using namespace tanh_detail;
    const __m256d neg_zero = _mm256_set1_pd(-0.0);
    const __m256d one = _mm256_set1_pd(1.0);

    __m256d sign = _mm256_and_pd(x, neg_zero);
    __m256d ax = _mm256_andnot_pd(neg_zero, x);
    ax = _mm256_min_pd(ax, _mm256_set1_pd(kSaturate));

    __m256d r = _mm256_mul_pd(ax, _mm256_set1_pd(-2.0));
    __m256d k = _mm256_round_pd(_mm256_mul_pd(r, _mm256_set1_pd(kInvLn2)),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d rr = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), r);
    rr = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Lo), rr);

    __m256d q = _mm256_set1_pd(kQ[0]);
    for (int i = 1; i < 12; ++i) q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ[i]));
    __m256d em1_small = _mm256_mul_pd(rr, q);

    // 2^k through the exponent bits; k is integer-valued in [-58, 0].
    __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i ebits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    __m256d p2k = _mm256_castsi256_pd(ebits);

    __m256d em1_big = _mm256_fmsub_pd(p2k, _mm256_add_pd(one, em1_small), one);
    __m256d k_is_zero = _mm256_cmp_pd(k, _mm256_setzero_pd(), _CMP_EQ_OQ);
    __m256d em1 = _mm256_blendv_pd(em1_big, em1_small, k_is_zero);

    __m256d t = _mm256_div_pd(em1, _mm256_add_pd(em1, _mm256_set1_pd(2.0)));
    // tanh(ax) = -t; restore the sign of x.
    return _mm256_xor_pd(t, _mm256_xor_pd(neg_zero, sign));
}

}  // namespace

void tanh_vec(std::size_t n, const double* x, double* y) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        double in[4] = {0, 0, 0, 0}, out[4];
        std::memcpy(in, x + i, (n - i) * sizeof(double));
        _mm256_storeu_pd(out, tanh4(_mm256_loadu_pd(in)));
        std::memcpy(y + i, out, (n - i) * sizeof(double));
    }
}

void tanh_backward(std::size_t n, const double* y, const double* dy, double* dx) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d d = _mm256_fnmadd_pd(vy, vy, one);
        _mm256_storeu_pd(dx + i, _mm256_mul_pd(_mm256_loadu_pd(dy + i), d));
    }
    for (; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

double max_abs_diff(std::size_t n, const double* a, const double* b) {
    const __m256d neg_zero = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(neg_zero, d));
    }
    double m = 0.0;
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    for (double v : lanes)
        if (v > m) m = v;
    for (; i < n; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d ibc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d ibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(vc1, vg));
        __m256d vv = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i),
                                     _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(vm, ibc1);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, ibc2)), veps);
        __m256d vp = _mm256_loadu_pd(p + i);
        vp = _mm256_sub_pd(vp, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace oneshot::kernels::avx2

#endif  // x86_64

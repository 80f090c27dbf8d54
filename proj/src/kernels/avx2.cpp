// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mbp/kernels.hpp"

namespace mbp::kernels::avx2 {

namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

} // namespace

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const std::size_t n = y.size();
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]));
        _mm256_storeu_pd(&y[i], vy);
    }
    for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void affine_noise(std::span<double> state, double scale, double shift,
                  std::span<const double> noise) {
    const std::size_t n = state.size();
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vb = _mm256_set1_pd(shift);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d z = _mm256_fmadd_pd(vs, _mm256_loadu_pd(&state[i]), vb);
        _mm256_storeu_pd(&state[i], _mm256_add_pd(z, _mm256_loadu_pd(&noise[i])));
    }
    for (; i < n; ++i) state[i] = std::fma(scale, state[i], shift) + noise[i];
}

void running_max_abs(double a, std::span<const double> x, std::span<double> m) {
    const std::size_t n = m.size();
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ax = _mm256_and_pd(_mm256_mul_pd(va, _mm256_loadu_pd(&x[i])), kAbsMask);
        _mm256_storeu_pd(&m[i], _mm256_max_pd(ax, _mm256_loadu_pd(&m[i])));
    }
    for (; i < n; ++i) m[i] = std::max(m[i], std::abs(a * x[i]));
}

std::size_t count_greater(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gt = _mm256_cmp_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), _CMP_GT_OQ);
        count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(gt)));
    }
    for (; i < n; ++i) count += a[i] > b[i] ? 1 : 0;
    return count;
}

std::size_t count_less_equal(std::span<const double> x, double t) {
    const std::size_t n = x.size();
    const __m256d vt = _mm256_set1_pd(t);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d le = _mm256_cmp_pd(_mm256_loadu_pd(&x[i]), vt, _CMP_LE_OQ);
        count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(le)));
    }
    for (; i < n; ++i) count += x[i] <= t ? 1 : 0;
    return count;
}

SumPair sum_and_squares(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d a = _mm256_loadu_pd(&x[i]);
        const __m256d b = _mm256_loadu_pd(&x[i + 4]);
        s0 = _mm256_add_pd(s0, a);
        s1 = _mm256_add_pd(s1, b);
        q0 = _mm256_fmadd_pd(a, a, q0);
        q1 = _mm256_fmadd_pd(b, b, q1);
    }
    SumPair s{hsum(_mm256_add_pd(s0, s1)), hsum(_mm256_add_pd(q0, q1))};
    for (; i < n; ++i) {
        s.sum += x[i];
        s.sum_sq += x[i] * x[i];
    }
    return s;
}

} // namespace mbp::kernels::avx2

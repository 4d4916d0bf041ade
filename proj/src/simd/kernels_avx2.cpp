// Copyright 2026 the affectloop authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 -mfma; only reached through the dispatcher after a
// CPUID check.

#include <immintrin.h>

#include "affectloop/simd/kernels.hpp"

namespace affectloop::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum(const double* x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    if (i + 4 <= n) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double* x, std::size_t n, double mean) {
    const __m256d m = _mm256_set1_pd(mean);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), m);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    if (i + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        s += d * d;
    }
    return s;
}

double sum_sq_successive_diff(const double* x, std::size_t n) {
    if (n < 2) return 0.0;
    const std::size_t pairs = n - 1;
    __m256d a0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= pairs; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i + 1), _mm256_loadu_pd(x + i));
        a0 = _mm256_fmadd_pd(d, d, a0);
    }
    double s = hsum(a0);
    for (; i < pairs; ++i) {
        const double d = x[i + 1] - x[i];
        s += d * d;
    }
    return s;
}

void accumulate_sq_diff(const double* col, std::size_t n, double v, double* out) {
    const __m256d vv = _mm256_set1_pd(v);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(col + i), vv);
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) {
        const double d = col[i] - v;
        out[i] += d * d;
    }
}

void dual_gradient_update(const double* ki, double ci, const double* kj, double cj, double* pos,
                          double* neg, std::size_t n) {
    const __m256d vci = _mm256_set1_pd(ci);
    const __m256d vcj = _mm256_set1_pd(cj);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d w =
            _mm256_fmadd_pd(vci, _mm256_loadu_pd(ki + k), _mm256_mul_pd(vcj, _mm256_loadu_pd(kj + k)));
        _mm256_storeu_pd(pos + k, _mm256_add_pd(_mm256_loadu_pd(pos + k), w));
        _mm256_storeu_pd(neg + k, _mm256_sub_pd(_mm256_loadu_pd(neg + k), w));
    }
    for (; k < n; ++k) {
        const double w = ci * ki[k] + cj * kj[k];
        pos[k] += w;
        neg[k] -= w;
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    if (i + 4 <= n) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

}  // namespace

namespace detail {
const KernelTable avx2_table{
    Isa::avx2, &sum, &sum_sq_dev, &sum_sq_successive_diff, &accumulate_sq_diff, &dual_gradient_update, &dot,
};
}  // namespace detail

}  // namespace affectloop::simd

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

#pragma once

// Data-parallel double-precision kernels used by the feature extractor and
// the kernel regressor. Every kernel has a portable scalar reference; wider
// variants are picked once at startup from what the CPU reports.
//
// Set AFFECTLOOP_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace affectloop::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
    Isa isa;
    // sum of x[0..n)
    double (*sum)(const double* x, std::size_t n);
    // sum of (x[i] - mean)^2
    double (*sum_sq_dev)(const double* x, std::size_t n, double mean);
    // sum of (x[i+1] - x[i])^2 for i in [0, n-1)
    double (*sum_sq_successive_diff)(const double* x, std::size_t n);
    // out[i] += (col[i] - v)^2
    void (*accumulate_sq_diff)(const double* col, std::size_t n, double v, double* out);
    // w = ci*ki + cj*kj;  pos += w;  neg -= w
    void (*dual_gradient_update)(const double* ki, double ci, const double* kj, double cj,
                                 double* pos, double* neg, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
};

/// True when the variant was compiled in and the running CPU supports it.
bool supported(Isa isa) noexcept;

/// Table for a specific variant; throws invalid_argument when unsupported.
const KernelTable& kernels_for(Isa isa);

/// The variant chosen for this process.
const KernelTable& active() noexcept;

namespace detail {
extern const KernelTable scalar_table;
#if defined(AFFECTLOOP_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double sum_sq_dev(std::span<const double> x, double mean) {
    return active().sum_sq_dev(x.data(), x.size(), mean);
}

inline double sum_sq_successive_diff(std::span<const double> x) {
    return active().sum_sq_successive_diff(x.data(), x.size());
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

}  // namespace affectloop::simd

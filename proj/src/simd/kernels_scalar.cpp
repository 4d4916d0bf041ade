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

#include "affectloop/simd/kernels.hpp"

namespace affectloop::simd {
namespace {

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double* x, std::size_t n, double mean) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        s += d * d;
    }
    return s;
}

double sum_sq_successive_diff(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = x[i] - x[i - 1];
        s += d * d;
    }
    return s;
}

void accumulate_sq_diff(const double* col, std::size_t n, double v, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = col[i] - v;
        out[i] += d * d;
    }
}

void dual_gradient_update(const double* ki, double ci, const double* kj, double cj, double* pos,
                          double* neg, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const double w = ci * ki[k] + cj * kj[k];
        pos[k] += w;
        neg[k] -= w;
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

}  // namespace

namespace detail {
const KernelTable scalar_table{
    Isa::scalar, &sum, &sum_sq_dev, &sum_sq_successive_diff, &accumulate_sq_diff, &dual_gradient_update, &dot,
};
}  // namespace detail

}  // namespace affectloop::simd

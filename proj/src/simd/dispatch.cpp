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

#include <cstdlib>
#include <string>

#include "affectloop/error.hpp"
#include "affectloop/simd/kernels.hpp"

namespace affectloop::simd {

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(AFFECTLOOP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) {
    if (!supported(isa)) {
        throw Error(Errc::invalid_argument, std::string(isa_name(isa)), "kernel variant not available on this CPU");
    }
#if defined(AFFECTLOOP_HAVE_AVX2)
    if (isa == Isa::avx2) return detail::avx2_table;
#endif
    return detail::scalar_table;
}

namespace {
const KernelTable& select() noexcept {
    if (const char* forced = std::getenv("AFFECTLOOP_SIMD")) {
        if (std::string_view(forced) == "scalar") return detail::scalar_table;
    }
#if defined(AFFECTLOOP_HAVE_AVX2)
    if (supported(Isa::avx2)) return detail::avx2_table;
#endif
    return detail::scalar_table;
}
}  // namespace

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

}  // namespace affectloop::simd

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

#include <cstddef>
#include <span>
#include <vector>

#include "affectloop/mdp.hpp"
#include "json.hpp"

namespace affectloop {

/// Row-major n x n row-stochastic matrix.
struct Chain {
    std::size_t n = 0;
    std::vector<double> p;

    double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }

    /// Throws Error(schema) unless square, non-negative and row-stochastic
    /// to 1e-9.
    void validate() const;
};

struct ErgodicityReport {
    bool irreducible = false;
    bool aperiodic = false;
    double spectral_gap = 0.0;      // 1 - |lambda_2|
    std::size_t classes = 0;         // strongly connected components
    std::vector<std::size_t> period; // per state; 0 when the state lies on no cycle
    std::vector<bool> recurrent;     // state belongs to a closed class

    nlohmann::json to_json() const;
};

/// Connectivity of the positive-entry digraph, period = gcd of cycle lengths
/// per class, and the numerically estimated second eigenvalue modulus.
ErgodicityReport check_ergodicity(const Chain& chain);

/// Power iteration pi <- pi P from the uniform vector until
/// |pi P - pi|_1 < tol. Throws Error(periodicity) when a closed class is
/// periodic, and Error(reducibility) if iteration fails to settle.
std::vector<double> stationary_distribution(const Chain& chain, double tol = 1e-10, std::size_t max_iters = 100000);

/// Chain induced by following `policy` (one action per state).
Chain policy_chain(const MdpModel& model, const std::vector<std::size_t>& policy);

/// Chain induced by always taking `action`.
Chain action_chain(const MdpModel& model, std::size_t action);

}  // namespace affectloop

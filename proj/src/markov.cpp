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

#include "affectloop/markov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>

#include "affectloop/error.hpp"

namespace affectloop {

void Chain::validate() const {
    if (n == 0 || p.size() != n * n) throw Error(Errc::schema, "chain", "expected a non-empty square matrix");
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = (*this)(i, j);
            if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::schema, "chain", "negative or non-finite entry");
            row += v;
        }
        if (std::abs(row - 1.0) > 1e-9) {
            throw Error(Errc::schema, "chain", "row " + std::to_string(i) + " sums to " + std::to_string(row));
        }
    }
}

nlohmann::json ErgodicityReport::to_json() const {
    return {{"irreducible", irreducible},
            {"aperiodic", aperiodic},
            {"ergodic", irreducible && aperiodic},
            {"spectral_gap", spectral_gap},
            {"classes", classes},
            {"period", period}};
}

namespace {

// Kosaraju over the positive-entry digraph; returns component id per state.
std::vector<std::size_t> components(const Chain& c, std::size_t& count) {
    const std::size_t n = c.n;
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> order;
    std::function<void(std::size_t)> forward = [&](std::size_t u) {
        seen[u] = true;
        for (std::size_t v = 0; v < n; ++v)
            if (c(u, v) > 0.0 && !seen[v]) forward(v);
        order.push_back(u);
    };
    for (std::size_t u = 0; u < n; ++u)
        if (!seen[u]) forward(u);

    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(n, unset);
    count = 0;
    std::function<void(std::size_t)> backward = [&](std::size_t u) {
        comp[u] = count;
        for (std::size_t v = 0; v < n; ++v)
            if (c(v, u) > 0.0 && comp[v] == unset) backward(v);
    };
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] == unset) {
            backward(*it);
            ++count;
        }
    }
    return comp;
}

}  // namespace

ErgodicityReport check_ergodicity(const Chain& chain) {
    chain.validate();
    const std::size_t n = chain.n;
    ErgodicityReport rep;
    const auto comp = components(chain, rep.classes);
    rep.irreducible = rep.classes == 1;

    rep.period.assign(n, 0);
    rep.recurrent.assign(n, false);
    for (std::size_t k = 0; k < rep.classes; ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (comp[i] == k) members.push_back(i);

        bool closed = true;
        for (std::size_t u : members)
            for (std::size_t v = 0; v < n; ++v)
                if (chain(u, v) > 0.0 && comp[v] != k) closed = false;

        // BFS levels inside the class; period = gcd(level[u] + 1 - level[v])
        // over internal edges.
        std::vector<long> level(n, -1);
        level[members.front()] = 0;
        std::queue<std::size_t> q;
        q.push(members.front());
        std::size_t g = 0;
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (!(chain(u, v) > 0.0) || comp[v] != k) continue;
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    q.push(v);
                } else {
                    g = std::gcd(g, static_cast<std::size_t>(std::labs(level[u] + 1 - level[v])));
                }
            }
        }
        for (std::size_t u : members) {
            rep.period[u] = g;
            rep.recurrent[u] = closed;
        }
    }
    rep.aperiodic = std::all_of(rep.period.begin(), rep.period.end(), [](std::size_t p) { return p <= 1; });

    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = chain(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    std::vector<double> moduli;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) moduli.push_back(std::abs(solver.eigenvalues()[i]));
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    rep.spectral_gap = moduli.size() > 1 ? std::clamp(1.0 - moduli[1], 0.0, 1.0) : 1.0;
    return rep;
}

std::vector<double> stationary_distribution(const Chain& chain, double tol, std::size_t max_iters) {
    const auto rep = check_ergodicity(chain);
    for (std::size_t i = 0; i < chain.n; ++i) {
        if (rep.recurrent[i] && rep.period[i] > 1) {
            throw Error(Errc::periodicity, "state " + std::to_string(i),
                        "closed class has period " + std::to_string(rep.period[i]) + "; no limiting distribution");
        }
    }

    const std::size_t n = chain.n;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * chain(i, j);
        double diff = 0.0;
        for (std::size_t j = 0; j < n; ++j) diff += std::abs(next[j] - pi[j]);
        pi.swap(next);
        if (diff < tol) return pi;
    }
    throw Error(rep.irreducible ? Errc::periodicity : Errc::reducibility, "chain",
                "power iteration did not converge within " + std::to_string(max_iters) + " iterations");
}

Chain policy_chain(const MdpModel& model, const std::vector<std::size_t>& policy) {
    const std::size_t ns = model.n_states();
    if (policy.size() != ns) throw Error(Errc::invalid_argument, "policy", "one action per state required");
    Chain c{ns, std::vector<double>(ns * ns)};
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t t = 0; t < ns; ++t) c.p[s * ns + t] = model.p(policy[s], s, t);
    return c;
}

Chain action_chain(const MdpModel& model, std::size_t action) {
    return policy_chain(model, std::vector<std::size_t>(model.n_states(), action));
}

}  // namespace affectloop

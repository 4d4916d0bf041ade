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

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace affectloop {

/// Teaching actions. Declaration order is the argmax tie-break order.
enum class Action { increase_pace, decrease_pace, simplify_content, no_change, enrich_content };

inline constexpr std::size_t kActionCount = 5;
inline constexpr std::array<Action, kActionCount> kActions{Action::increase_pace, Action::decrease_pace,
                                                          Action::simplify_content, Action::no_change,
                                                          Action::enrich_content};

constexpr std::size_t index_of(Action a) noexcept { return static_cast<std::size_t>(a); }
std::string_view action_name(Action a) noexcept;
std::optional<Action> action_from_name(std::string_view name) noexcept;
constexpr bool is_pace_action(Action a) noexcept {
    return a == Action::increase_pace || a == Action::decrease_pace;
}

inline constexpr std::size_t kNoAction = std::numeric_limits<std::size_t>::max();

/// Finite MDP with per-successor-state discounts. Actions are stored in
/// tie-break order. Tensors are dense and indexed [action][state][next].
struct MdpModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<double> transitions;
    std::vector<double> rewards;
    std::vector<double> discounts;  // indexed by successor state

    MdpModel() = default;
    MdpModel(std::vector<std::string> state_names, std::vector<std::string> action_names);

    std::size_t n_states() const noexcept { return states.size(); }
    std::size_t n_actions() const noexcept { return actions.size(); }
    std::size_t at(std::size_t a, std::size_t s, std::size_t next) const noexcept {
        return (a * n_states() + s) * n_states() + next;
    }
    double p(std::size_t a, std::size_t s, std::size_t next) const { return transitions[at(a, s, next)]; }
    double r(std::size_t a, std::size_t s, std::size_t next) const { return rewards[at(a, s, next)]; }

    std::optional<std::size_t> state_index(std::string_view name) const;
    std::optional<std::size_t> action_index(std::string_view name) const;

    /// Throws Error(schema) on shape errors, non-stochastic rows, negative
    /// probabilities, discounts outside [0, 1) or non-finite rewards.
    void validate() const;

    /// Names, never indices, so files survive reordering.
    nlohmann::json to_json() const;
    static MdpModel from_json(const nlohmann::json& j);
};

struct ViOptions {
    double tol = 1e-6;
    std::size_t max_iters = 1000;
    std::uint64_t seed = 0;
};

struct Policy {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::size_t> optimal;
    std::vector<std::size_t> suboptimal;  // kNoAction with a single action
    std::vector<double> q;                // [state][action]
    std::vector<double> v;
    std::size_t iterations = 0;
    bool converged = false;
    double residual = 0.0;
    std::vector<double> residuals;  // sup-norm change per sweep
    double tie_tolerance = 0.0;     // Q values this close count as tied

    std::size_t n_states() const noexcept { return v.size(); }
    std::size_t n_actions() const noexcept { return action_names.size(); }
    double q_at(std::size_t s, std::size_t a) const { return q[s * n_actions() + a]; }

    /// Re-derives optimal, suboptimal and v from q; among actions within
    /// tie_tolerance of the best, the first index wins.
    void rederive_from_q();

    nlohmann::json to_json() const;
};

/// V_{i+1}(s) = max_a sum_s' P_a(s'|s) (R_a(s,s') + g(s') V_i(s')), from a
/// seeded random V_0. Sweeps stop once the sup-norm change and its
/// geometric tail bound g_max/(1-g_max) * change are both below tol;
/// hitting max_iters returns with converged = false.
Policy value_iteration(const MdpModel& model, const ViOptions& options = {});

enum class LookupRank { optimal, suboptimal, best_feasible };
std::string_view rank_name(LookupRank r) noexcept;
std::optional<LookupRank> rank_from_name(std::string_view name) noexcept;

struct LookupResult {
    std::size_t action;
    LookupRank rank;
};

/// Optimal action if feasible, else the sub-optimal one, else the feasible
/// action with the highest Q. `infeasible` is indexed by action.
LookupResult lookup_action(const Policy& policy, std::size_t state, const std::vector<bool>& infeasible);

struct Transition {
    std::size_t state;
    std::size_t action;
    std::size_t next;
    std::int64_t ts_ms = 0;
};

class TransitionLog {
public:
    TransitionLog(std::size_t n_states, std::size_t n_actions) : n_states_(n_states), n_actions_(n_actions) {}

    /// Throws Error(invalid_argument) for indices outside the state/action sets.
    void append(const Transition& t);
    const std::vector<Transition>& entries() const noexcept { return entries_; }
    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<Transition> entries_;
};

/// Laplace-smoothed counts: (count(s,a,s') + k) / (count(s,a,.) + k |S|),
/// laid out like MdpModel::transitions.
std::vector<double> estimate_transitions(const TransitionLog& log, double smoothing = 1.0);

}  // namespace affectloop

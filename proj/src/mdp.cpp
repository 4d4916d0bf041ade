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

#include "affectloop/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "affectloop/error.hpp"

namespace affectloop {

std::string_view action_name(Action a) noexcept {
    switch (a) {
        case Action::increase_pace: return "increase_pace";
        case Action::decrease_pace: return "decrease_pace";
        case Action::simplify_content: return "simplify_content";
        case Action::no_change: return "no_change";
        case Action::enrich_content: return "enrich_content";
    }
    return "?";
}

std::optional<Action> action_from_name(std::string_view name) noexcept {
    for (Action a : kActions) {
        if (action_name(a) == name) return a;
    }
    return std::nullopt;
}

std::string_view rank_name(LookupRank r) noexcept {
    switch (r) {
        case LookupRank::optimal: return "optimal";
        case LookupRank::suboptimal: return "suboptimal";
        case LookupRank::best_feasible: return "best-feasible";
    }
    return "?";
}

std::optional<LookupRank> rank_from_name(std::string_view name) noexcept {
    for (auto r : {LookupRank::optimal, LookupRank::suboptimal, LookupRank::best_feasible}) {
        if (rank_name(r) == name) return r;
    }
    return std::nullopt;
}

MdpModel::MdpModel(std::vector<std::string> state_names, std::vector<std::string> action_names)
    : states(std::move(state_names)), actions(std::move(action_names)) {
    const std::size_t n = n_actions() * n_states() * n_states();
    transitions.assign(n, 0.0);
    rewards.assign(n, 0.0);
    discounts.assign(n_states(), 0.0);
}

std::optional<std::size_t> MdpModel::state_index(std::string_view name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> MdpModel::action_index(std::string_view name) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i] == name) return i;
    return std::nullopt;
}

void MdpModel::validate() const {
    const std::size_t ns = n_states();
    const std::size_t na = n_actions();
    if (ns == 0 || na == 0) throw Error(Errc::schema, "mdp", "empty state or action set");
    const std::size_t n = na * ns * ns;
    if (transitions.size() != n || rewards.size() != n || discounts.size() != ns) {
        throw Error(Errc::schema, "mdp", "tensor shapes do not match the state/action sets");
    }
    for (std::size_t s = 0; s < ns; ++s) {
        const double g = discounts[s];
        if (!(g >= 0.0 && g < 1.0)) throw Error(Errc::schema, "discounts/" + states[s], "must lie in [0, 1)");
    }
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t s = 0; s < ns; ++s) {
            double row = 0.0;
            for (std::size_t t = 0; t < ns; ++t) {
                const double p = transitions[at(a, s, t)];
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw Error(Errc::schema, "transitions/" + actions[a] + "/" + states[s], "negative or non-finite probability");
                }
                if (!std::isfinite(rewards[at(a, s, t)])) {
                    throw Error(Errc::schema, "rewards/" + actions[a] + "/" + states[s], "non-finite reward");
                }
                row += p;
            }
            if (std::abs(row - 1.0) > 1e-9) {
                throw Error(Errc::schema, "transitions/" + actions[a] + "/" + states[s],
                            "row sums to " + std::to_string(row) + ", expected 1");
            }
        }
    }
}

nlohmann::json MdpModel::to_json() const {
    auto tensor = [&](const std::vector<double>& data) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (std::size_t a = 0; a < n_actions(); ++a) {
            nlohmann::ordered_json per_state = nlohmann::ordered_json::object();
            for (std::size_t s = 0; s < n_states(); ++s) {
                nlohmann::ordered_json row = nlohmann::ordered_json::object();
                for (std::size_t t = 0; t < n_states(); ++t) row[states[t]] = data[at(a, s, t)];
                per_state[states[s]] = std::move(row);
            }
            out[actions[a]] = std::move(per_state);
        }
        return out;
    };
    nlohmann::ordered_json disc = nlohmann::ordered_json::object();
    for (std::size_t s = 0; s < n_states(); ++s) disc[states[s]] = discounts[s];
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["states"] = states;
    j["actions"] = actions;
    j["tie_break"] = actions;
    j["discounts"] = std::move(disc);
    j["transitions"] = tensor(transitions);
    j["rewards"] = tensor(rewards);
    return nlohmann::json::parse(j.dump());
}

MdpModel MdpModel::from_json(const nlohmann::json& j) {
    try {
        auto states = j.at("states").get<std::vector<std::string>>();
        auto actions = j.at("actions").get<std::vector<std::string>>();
        if (j.contains("tie_break")) {
            auto order = j.at("tie_break").get<std::vector<std::string>>();
            auto sorted_a = actions;
            auto sorted_o = order;
            std::sort(sorted_a.begin(), sorted_a.end());
            std::sort(sorted_o.begin(), sorted_o.end());
            if (sorted_a != sorted_o) throw Error(Errc::schema, "tie_break", "must be a permutation of actions");
            actions = std::move(order);
        }
        MdpModel m(states, actions);
        for (std::size_t s = 0; s < m.n_states(); ++s) m.discounts[s] = j.at("discounts").at(states[s]).get<double>();

        const auto& tr = j.at("transitions");
        for (std::size_t a = 0; a < m.n_actions(); ++a)
            for (std::size_t s = 0; s < m.n_states(); ++s)
                for (std::size_t t = 0; t < m.n_states(); ++t)
                    m.transitions[m.at(a, s, t)] = tr.at(actions[a]).at(states[s]).at(states[t]).get<double>();

        const auto& rw = j.at("rewards");
        if (rw.contains("by_successor")) {
            const auto& by = rw.at("by_successor");
            for (std::size_t a = 0; a < m.n_actions(); ++a)
                for (std::size_t s = 0; s < m.n_states(); ++s)
                    for (std::size_t t = 0; t < m.n_states(); ++t)
                        m.rewards[m.at(a, s, t)] = by.at(states[t]).get<double>();
        } else {
            for (std::size_t a = 0; a < m.n_actions(); ++a)
                for (std::size_t s = 0; s < m.n_states(); ++s)
                    for (std::size_t t = 0; t < m.n_states(); ++t)
                        m.rewards[m.at(a, s, t)] = rw.at(actions[a]).at(states[s]).at(states[t]).get<double>();
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "mdp", e.what());
    }
}

void Policy::rederive_from_q() {
    const std::size_t ns = n_states();
    const std::size_t na = n_actions();
    optimal.assign(ns, kNoAction);
    suboptimal.assign(ns, kNoAction);
    // First action, other than `skip`, within the tolerance of the best of the rest.
    auto first_near_max = [&](std::size_t s, std::size_t skip) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a)
            if (a != skip) top = std::max(top, q_at(s, a));
        for (std::size_t a = 0; a < na; ++a)
            if (a != skip && q_at(s, a) >= top - tie_tolerance) return a;
        return kNoAction;
    };
    for (std::size_t s = 0; s < ns; ++s) {
        optimal[s] = first_near_max(s, kNoAction);
        suboptimal[s] = first_near_max(s, optimal[s]);
        v[s] = q_at(s, optimal[s]);
    }
}

nlohmann::json Policy::to_json() const {
    nlohmann::json opt = nlohmann::json::object();
    nlohmann::json sub = nlohmann::json::object();
    nlohmann::json qv = nlohmann::json::object();
    nlohmann::json vv = nlohmann::json::object();
    for (std::size_t s = 0; s < n_states(); ++s) {
        const auto& sn = state_names[s];
        opt[sn] = action_names[optimal[s]];
        sub[sn] = suboptimal[s] == kNoAction ? nlohmann::json(nullptr) : nlohmann::json(action_names[suboptimal[s]]);
        nlohmann::json row = nlohmann::json::object();
        for (std::size_t a = 0; a < n_actions(); ++a) row[action_names[a]] = q_at(s, a);
        qv[sn] = std::move(row);
        vv[sn] = v[s];
    }
    return {{"optimal", std::move(opt)},
            {"suboptimal", std::move(sub)},
            {"q_values", std::move(qv)},
            {"value_function", std::move(vv)},
            {"iterations", iterations},
            {"converged", converged},
            {"residual", residual}};
}

namespace {

void backup(const MdpModel& m, const std::vector<double>& v, std::vector<double>& q) {
    const std::size_t ns = m.n_states();
    const std::size_t na = m.n_actions();
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            double acc = 0.0;
            for (std::size_t t = 0; t < ns; ++t) acc += m.p(a, s, t) * (m.r(a, s, t) + m.discounts[t] * v[t]);
            q[s * na + a] = acc;
        }
    }
}

}  // namespace

Policy value_iteration(const MdpModel& model, const ViOptions& options) {
    model.validate();
    if (!(options.tol > 0.0)) throw Error(Errc::invalid_argument, "tol", "must be positive");
    const std::size_t ns = model.n_states();
    const std::size_t na = model.n_actions();
    const double gmax = *std::max_element(model.discounts.begin(), model.discounts.end());
    const double tail = gmax > 0.0 ? gmax / (1.0 - gmax) : 0.0;

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> init(0.0, 1.0);
    std::vector<double> v(ns);
    for (auto& x : v) x = init(rng);

    Policy pol;
    pol.state_names = model.states;
    pol.action_names = model.actions;
    pol.q.assign(ns * na, 0.0);
    std::vector<double> next(ns);

    for (std::size_t it = 0; it < options.max_iters; ++it) {
        backup(model, v, pol.q);
        double change = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            double best = pol.q[s * na];
            for (std::size_t a = 1; a < na; ++a) best = std::max(best, pol.q[s * na + a]);
            if (!std::isfinite(best)) throw Error(Errc::numeric, model.states[s], "non-finite value during iteration");
            next[s] = best;
            change = std::max(change, std::abs(best - v[s]));
        }
        v.swap(next);
        pol.residuals.push_back(change);
        pol.iterations = it + 1;
        pol.residual = change;
        if (change < options.tol && change * tail < options.tol) {
            pol.converged = true;
            break;
        }
    }

    backup(model, v, pol.q);
    pol.v.assign(ns, 0.0);
    pol.tie_tolerance = options.tol;
    pol.rederive_from_q();
    return pol;
}

LookupResult lookup_action(const Policy& policy, std::size_t state, const std::vector<bool>& infeasible) {
    if (state >= policy.n_states()) throw Error(Errc::invalid_argument, "state", "index out of range");
    const std::size_t na = policy.n_actions();
    auto blocked = [&](std::size_t a) { return a < infeasible.size() && infeasible[a]; };

    if (!blocked(policy.optimal[state])) return {policy.optimal[state], LookupRank::optimal};
    const auto sub = policy.suboptimal[state];
    if (sub != kNoAction && !blocked(sub)) return {sub, LookupRank::suboptimal};

    std::size_t best = kNoAction;
    for (std::size_t a = 0; a < na; ++a) {
        if (blocked(a)) continue;
        if (best == kNoAction || policy.q_at(state, a) > policy.q_at(state, best)) best = a;
    }
    if (best == kNoAction) {
        throw Error(Errc::infeasible, policy.state_names[state], "every action is marked infeasible");
    }
    return {best, LookupRank::best_feasible};
}

void TransitionLog::append(const Transition& t) {
    if (t.state >= n_states_ || t.next >= n_states_) throw Error(Errc::invalid_argument, "state", "not in the state set");
    if (t.action >= n_actions_) throw Error(Errc::invalid_argument, "action", "not in the action set");
    entries_.push_back(t);
}

std::vector<double> estimate_transitions(const TransitionLog& log, double smoothing) {
    if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
        throw Error(Errc::invalid_argument, "smoothing", "must be finite and non-negative");
    }
    const std::size_t ns = log.n_states();
    const std::size_t na = log.n_actions();
    std::vector<double> counts(na * ns * ns, 0.0);
    for (const auto& t : log.entries()) counts[(t.action * ns + t.state) * ns + t.next] += 1.0;

    std::vector<double> p(counts.size());
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t s = 0; s < ns; ++s) {
            const std::size_t base = (a * ns + s) * ns;
            double row = 0.0;
            for (std::size_t t = 0; t < ns; ++t) row += counts[base + t];
            const double denom = row + smoothing * static_cast<double>(ns);
            for (std::size_t t = 0; t < ns; ++t) {
                // An unobserved row with zero smoothing has no evidence at all.
                p[base + t] = denom > 0.0 ? (counts[base + t] + smoothing) / denom : 1.0 / static_cast<double>(ns);
            }
        }
    }
    return p;
}

}  // namespace affectloop

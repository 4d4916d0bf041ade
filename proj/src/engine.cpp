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

#include "affectloop/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "affectloop/error.hpp"

namespace affectloop {

namespace {

constexpr std::array<std::string_view, 3> kPaceNames{"slow", "medium", "fast"};
constexpr std::array<std::string_view, 2> kStyleNames{"illustrations", "descriptions"};
constexpr std::array<std::string_view, 3> kSourceNames{"applied", "override", "infeasible"};
constexpr std::array<std::string_view, 2> kInterventionNames{"pace", "content"};
constexpr std::array<std::string_view, 3> kStatusNames{"calibrating", "live", "ended"};

template <typename E, std::size_t N>
std::optional<E> lookup_name(const std::array<std::string_view, N>& names, std::string_view name) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == name) return static_cast<E>(i);
    return std::nullopt;
}

nlohmann::json emotion_counts(const std::array<std::size_t, kEmotionCount>& counts) {
    nlohmann::json j = nlohmann::json::object();
    for (Emotion e : kEmotions) j[std::string(emotion_name(e))] = counts[index_of(e)];
    return j;
}

bool skippable(Errc c) { return c == Errc::warm_up || c == Errc::calibration_required; }

}  // namespace

nlohmann::json StudentPreferences::to_json() const {
    return {{"pace_preference", kPaceNames[static_cast<std::size_t>(pace)]},
            {"content_style", kStyleNames[static_cast<std::size_t>(style)]}};
}

StudentPreferences StudentPreferences::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(Errc::schema, "preferences", "expected an object");
    StudentPreferences p;
    if (j.contains("pace_preference")) {
        if (!j["pace_preference"].is_string()) throw Error(Errc::schema, "pace_preference", "expected a string");
        const auto v = lookup_name<PacePreference>(kPaceNames, j["pace_preference"].get<std::string>());
        if (!v) throw Error(Errc::schema, "pace_preference", "expected slow, medium or fast");
        p.pace = *v;
    }
    if (j.contains("content_style")) {
        if (!j["content_style"].is_string()) throw Error(Errc::schema, "content_style", "expected a string");
        const auto v = lookup_name<ContentStyle>(kStyleNames, j["content_style"].get<std::string>());
        if (!v) throw Error(Errc::schema, "content_style", "expected illustrations or descriptions");
        p.style = *v;
    }
    return p;
}

nlohmann::json CollectiveState::to_json() const {
    nlohmann::json st = nlohmann::json::object();
    for (const auto& [id, r] : students) {
        st[id] = {{"valence", r.point.valence},
                  {"arousal", r.point.arousal},
                  {"weight", r.weight},
                  {"label", emotion_name(r.label)},
                  {"confidence", r.confidence}};
    }
    return {{"ts_ms", ts_ms},
            {"counts", emotion_counts(counts)},
            {"students", std::move(st)},
            {"centroid", affectloop::to_json(centroid)},
            {"collective", affectloop::to_json(collective)},
            {"distinct_emotions", distinct_emotions}};
}

CollectiveState aggregate(std::span<const WeightedPoint> points, const FuzzyConfig& fuzzy) {
    if (points.empty()) throw Error(Errc::insufficient_data, "students", "no reporting students");
    CollectiveState out;
    double wsum = 0.0, v = 0.0, a = 0.0;
    for (const auto& p : points) {
        if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
            throw Error(Errc::invalid_argument, p.student_id, "weight must be positive and finite");
        }
        check_va_bounds(p.point);
        const auto es = classify_emotion(p.point, fuzzy);
        ++out.counts[index_of(es.label)];
        out.students[p.student_id] = {p.point, p.weight, es.label, es.confidence};
        wsum += p.weight;
        v += p.weight * p.point.valence;
        a += p.weight * p.point.arousal;
    }
    out.centroid = {std::clamp(v / wsum, -1.0, 1.0), std::clamp(a / wsum, -1.0, 1.0)};
    out.collective = classify_emotion(out.centroid, fuzzy);
    out.distinct_emotions = static_cast<std::size_t>(std::count_if(out.counts.begin(), out.counts.end(),
                                                                   [](std::size_t n) { return n > 0; }));
    return out;
}

ClassPreferences majority(std::span<const StudentPreferences> prefs) {
    std::array<std::size_t, 3> pace{};
    std::array<std::size_t, 2> style{};
    for (const auto& p : prefs) {
        ++pace[static_cast<std::size_t>(p.pace)];
        ++style[static_cast<std::size_t>(p.style)];
    }
    ClassPreferences out;
    const auto slow = pace[0], medium = pace[1], fast = pace[2];
    if (fast > slow && fast > medium) out.pace = PacePreference::fast;
    else if (slow > fast && slow > medium) out.pace = PacePreference::slow;
    out.style = style[0] > style[1] ? ContentStyle::illustrations : ContentStyle::descriptions;
    return out;
}

Policy apply_preferences(const Policy& policy, const ClassPreferences& prefs, std::optional<double> delta) {
    Policy out = policy;
    double bias = 0.0;
    if (delta) {
        bias = *delta;
    } else {
        for (double q : policy.q) bias = std::max(bias, std::abs(q));
        bias *= 0.05;
    }
    auto boost = [&](Action a) {
        const auto it = std::find(out.action_names.begin(), out.action_names.end(), action_name(a));
        if (it == out.action_names.end()) return;
        const auto ai = static_cast<std::size_t>(it - out.action_names.begin());
        for (std::size_t s = 0; s < out.n_states(); ++s) out.q[s * out.n_actions() + ai] += bias;
    };
    if (prefs.pace == PacePreference::fast) boost(Action::increase_pace);
    if (prefs.pace == PacePreference::slow) boost(Action::decrease_pace);
    if (prefs.style == ContentStyle::illustrations) boost(Action::enrich_content);
    out.rederive_from_q();
    return out;
}

nlohmann::json Suggestion::to_json() const {
    return {{"action", action_name(action)},
            {"rank", rank_name(rank)},
            {"collective_label", emotion_name(label)},
            {"confidence", confidence},
            {"ts_ms", ts_ms},
            {"rationale", rationale}};
}

Suggestion Suggestion::from_json(const nlohmann::json& j) {
    try {
        Suggestion s;
        const auto a = action_from_name(j.at("action").get<std::string>());
        const auto r = rank_from_name(j.at("rank").get<std::string>());
        const auto e = emotion_from_name(j.at("collective_label").get<std::string>());
        if (!a || !r || !e) throw Error(Errc::schema, "suggestion", "unknown action, rank or label");
        s.action = *a;
        s.rank = *r;
        s.label = *e;
        s.confidence = j.at("confidence").get<double>();
        s.ts_ms = j.at("ts_ms").get<std::int64_t>();
        s.rationale = j.value("rationale", "");
        return s;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::schema, "suggestion", ex.what());
    }
}

std::string_view source_name(ActionSource s) noexcept { return kSourceNames[static_cast<std::size_t>(s)]; }
std::optional<ActionSource> source_from_name(std::string_view name) noexcept {
    return lookup_name<ActionSource>(kSourceNames, name);
}
std::string_view intervention_name(InterventionKind k) noexcept {
    return kInterventionNames[static_cast<std::size_t>(k)];
}
std::optional<InterventionKind> intervention_from_name(std::string_view name) noexcept {
    return lookup_name<InterventionKind>(kInterventionNames, name);
}
std::string_view status_name(SessionStatus s) noexcept { return kStatusNames[static_cast<std::size_t>(s)]; }
std::optional<SessionStatus> status_from_name(std::string_view name) noexcept {
    return lookup_name<SessionStatus>(kStatusNames, name);
}

nlohmann::json EngineConfig::to_json() const {
    nlohmann::json j{{"window", window},
                     {"tick_period_ms", tick_period_ms},
                     {"stability_ticks", stability_ticks},
                     {"calibration_interval_ms", calibration_interval_ms},
                     {"ring_capacity", ring_capacity},
                     {"fuzzy", fuzzy.to_json()},
                     {"calibration",
                      {{"min_samples", calibration.min_samples},
                       {"freeze_after", calibration.freeze_after},
                       {"feature_space", feature_space_name(calibration.space)}}}};
    j["preference_delta"] = preference_delta ? nlohmann::json(*preference_delta) : nlohmann::json(nullptr);
    return j;
}

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
    try {
        EngineConfig c;
        c.window = j.value("window", c.window);
        c.tick_period_ms = j.value("tick_period_ms", c.tick_period_ms);
        c.stability_ticks = j.value("stability_ticks", c.stability_ticks);
        c.calibration_interval_ms = j.value("calibration_interval_ms", c.calibration_interval_ms);
        c.ring_capacity = j.value("ring_capacity", c.ring_capacity);
        if (j.contains("fuzzy")) c.fuzzy = FuzzyConfig::from_json(j["fuzzy"]);
        if (j.contains("calibration")) {
            const auto& cal = j["calibration"];
            c.calibration.min_samples = cal.value("min_samples", c.calibration.min_samples);
            c.calibration.freeze_after = cal.value("freeze_after", c.calibration.freeze_after);
            if (cal.contains("feature_space"))
                c.calibration.space = feature_space_from_name(cal["feature_space"].get<std::string>());
        }
        if (j.contains("preference_delta") && !j["preference_delta"].is_null())
            c.preference_delta = j["preference_delta"].get<double>();
        if (c.window == 0 || c.tick_period_ms <= 0 || c.stability_ticks == 0 || c.calibration_interval_ms <= 0 ||
            c.ring_capacity < c.window) {
            throw Error(Errc::schema, "engine", "window, periods and stability must be positive; ring >= window");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "engine", e.what());
    }
}

nlohmann::json IngestReport::to_json() const {
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : errors) errs.push_back({{"line", e.line}, {"reason", e.reason}});
    return {{"accepted", accepted}, {"rejected", rejected}, {"errors", std::move(errs)}};
}

Session::Session(std::string id, std::vector<RosterEntry> roster, std::shared_ptr<const VaRegressor> model,
                 std::shared_ptr<const Policy> policy, EngineConfig config, std::int64_t created_ms)
    : id_(std::move(id)),
      roster_(std::move(roster)),
      model_(std::move(model)),
      config_(config),
      streams_(config.ring_capacity),
      transitions_(kEmotionCount, kActionCount) {
    if (roster_.empty()) throw Error(Errc::schema, "roster", "at least one student is required");
    for (std::size_t i = 0; i < roster_.size(); ++i) {
        if (roster_[i].student_id.empty()) throw Error(Errc::schema, "roster", "empty student id");
        for (std::size_t j = 0; j < i; ++j)
            if (roster_[j].student_id == roster_[i].student_id)
                throw Error(Errc::schema, "roster", "duplicate student '" + roster_[i].student_id + "'");
    }
    if (!model_ || !model_->trained()) throw Error(Errc::untrained, "model", "session needs a trained regressor");
    if (!policy) throw Error(Errc::precondition, "policy", "session needs a policy");
    if (config_.ring_capacity < config_.window) throw Error(Errc::invalid_argument, "ring_capacity", "must hold a window");
    config_.calibration.space = model_->feature_space();
    calibration_ = CalibrationState(config_.calibration);

    for (Emotion e : kEmotions) {
        const auto it = std::find(policy->state_names.begin(), policy->state_names.end(), emotion_name(e));
        if (it == policy->state_names.end())
            throw Error(Errc::schema, "mdp", "state '" + std::string(emotion_name(e)) + "' missing from policy");
        state_index_[index_of(e)] = static_cast<std::size_t>(it - policy->state_names.begin());
    }
    for (Action a : kActions) {
        const auto it = std::find(policy->action_names.begin(), policy->action_names.end(), action_name(a));
        if (it == policy->action_names.end())
            throw Error(Errc::schema, "mdp", "action '" + std::string(action_name(a)) + "' missing from policy");
        action_index_[index_of(a)] = static_cast<std::size_t>(it - policy->action_names.begin());
    }
    std::vector<StudentPreferences> prefs;
    for (const auto& r : roster_) prefs.push_back(r.preferences);
    policy_ = apply_preferences(*policy, majority(prefs), config_.preference_delta);
    infeasible_.assign(policy_.n_actions(), false);
    transitions_ = TransitionLog(policy_.n_states(), policy_.n_actions());

    nlohmann::json roster_json = nlohmann::json::array();
    for (const auto& r : roster_) roster_json.push_back({{"student_id", r.student_id}, {"preferences", r.preferences.to_json()}});
    std::lock_guard lock(mu_);
    append_event({std::string(event_type::session_created), created_ms,
                  {{"session_id", id_}, {"roster", std::move(roster_json)}, {"engine", config_.to_json()}}});
    publish_locked();
}

void Session::set_sink(EventSink sink) {
    std::lock_guard lock(mu_);
    sink_ = std::move(sink);
    if (sink_)
        for (const auto& e : events_) sink_(e);
}

SessionStatus Session::status() const {
    std::lock_guard lock(mu_);
    return status_;
}

void Session::append_event(Event e) {
    metrics_.apply(e);
    events_.push_back(std::move(e));
    if (sink_) sink_(events_.back());
}

void Session::check_live(std::string_view what) const {
    if (status_ != SessionStatus::live) {
        throw Error(Errc::conflict, std::string(what), "session is " + std::string(status_name(status_)) + ", not live");
    }
}

void Session::ingest(const SensorSample& s) {
    std::lock_guard lock(mu_);
    ingest_locked(s);
    publish_locked();
}

void Session::ingest_locked(const SensorSample& s) {
    if (status_ == SessionStatus::ended) throw Error(Errc::conflict, id_, "session has ended");
    const bool rostered = std::any_of(roster_.begin(), roster_.end(),
                                      [&](const RosterEntry& r) { return r.student_id == s.student_id; });
    if (!rostered) throw Error(Errc::not_found, s.student_id, "student is not on the roster");
    validate_value(s.channel, s.value);
    advance_locked(s.ts_ms);
    streams_.ingest(s);
}

void Session::advance_locked(std::int64_t ts_ms) {
    data_clock_ms_ = std::max(data_clock_ms_, ts_ms);
    if (status_ == SessionStatus::calibrating && ts_ms >= next_calibration_ms_) {
        const auto step = config_.calibration_interval_ms;
        calibration_step_locked(ts_ms - ts_ms % step);
        next_calibration_ms_ = (ts_ms / step + 1) * step;
    } else if (status_ == SessionStatus::live && ts_ms >= last_tick_ms_ + config_.tick_period_ms) {
        const auto period = config_.tick_period_ms;
        tick_locked(last_tick_ms_ + period * ((ts_ms - last_tick_ms_) / period));
    }
}

void Session::calibration_step_locked(std::int64_t /*at_ms*/) {
    for (const auto& r : roster_) {
        const auto snap = streams_.snapshot(r.student_id);
        if (!snap) continue;
        try {
            calibration_.update_extrema(r.student_id, extract_features(*snap, config_.window));
        } catch (const Error& e) {
            if (e.code() != Errc::warm_up) throw;
        }
    }
}

IngestReport Session::ingest_batch(std::span<const SensorSample> samples) {
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::ended) throw Error(Errc::conflict, id_, "session has ended");
    IngestReport report;
    std::map<std::string, std::size_t> per_student;
    std::int64_t first = -1, last = -1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        try {
            ingest_locked(samples[i]);
            ++report.accepted;
            ++per_student[samples[i].student_id];
            if (first < 0) first = samples[i].ts_ms;
            last = std::max(last, samples[i].ts_ms);
        } catch (const Error& e) {
            ++report.rejected;
            report.errors.push_back({i + 1, e.what()});
        }
    }
    if (report.accepted + report.rejected > 0) {
        append_event({std::string(event_type::ingest), std::max<std::int64_t>(data_clock_ms_, 0),
                      {{"accepted", report.accepted},
                       {"rejected", report.rejected},
                       {"students", per_student},
                       {"first_ts_ms", first},
                       {"last_ts_ms", last}}});
    }
    publish_locked();
    return report;
}

IngestReport Session::ingest_ndjson(std::string_view body) {
    std::vector<SensorSample> parsed;
    std::vector<std::size_t> line_of;
    IngestReport parse_report;
    std::size_t lineno = 0, start = 0;
    while (start <= body.size()) {
        auto end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        auto line = body.substr(start, end - start);
        ++lineno;
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == body.size()) break;
            continue;
        }
        try {
            parsed.push_back(parse_sample(line));
            line_of.push_back(lineno);
        } catch (const Error& e) {
            ++parse_report.rejected;
            parse_report.errors.push_back({lineno, e.what()});
        }
        if (end == body.size()) break;
    }
    auto report = ingest_batch(parsed);
    for (auto& e : report.errors) e.line = line_of[e.line - 1];
    report.rejected += parse_report.rejected;
    report.errors.insert(report.errors.end(), parse_report.errors.begin(), parse_report.errors.end());
    std::sort(report.errors.begin(), report.errors.end(),
              [](const LineResult& a, const LineResult& b) { return a.line < b.line; });
    return report;
}

std::optional<Suggestion> Session::tick(std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    if (status_ != SessionStatus::live || now_ms < last_tick_ms_ + config_.tick_period_ms) return std::nullopt;
    auto s = tick_locked(now_ms);
    publish_locked();
    return s;
}

std::optional<Suggestion> Session::tick_locked(std::int64_t now_ms) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<WeightedPoint> points;
    points.reserve(roster_.size());
    std::size_t skipped = 0;
    for (const auto& r : roster_) {
        const auto snap = streams_.snapshot(r.student_id);
        if (!snap) {
            ++skipped;
            continue;
        }
        try {
            const auto fv = extract_features(*snap, config_.window);
            const auto cal = calibration_.normalize(r.student_id, fv);
            points.push_back({r.student_id, predict_va(*model_, cal.values), 1.0});
        } catch (const Error& e) {
            if (!skippable(e.code())) throw;
            ++skipped;
        }
    }

    std::optional<CollectiveState> state;
    std::optional<Suggestion> emitted;
    if (!points.empty()) {
        state = aggregate(points, config_.fuzzy);
        state->ts_ms = now_ms;
        const Emotion label = state->collective.label;
        const std::size_t s_now = state_index_[index_of(label)];
        if (previous_label_ && pending_action_) {
            transitions_.append({state_index_[index_of(*previous_label_)], action_index_[index_of(*pending_action_)],
                                 s_now, now_ms});
        }
        pending_action_.reset();
        stable_ticks_ = (previous_label_ && *previous_label_ == label) ? stable_ticks_ + 1 : 1;
        previous_label_ = label;
        ++ticks_since_emit_;

        const auto pick = lookup_action(policy_, s_now, infeasible_);
        const auto action = *action_from_name(policy_.action_names[pick.action]);
        const std::size_t k = config_.stability_ticks;
        const bool changed = !last_emitted_ || last_emitted_->label != label || last_emitted_->action != action;
        if (stable_ticks_ >= k && (changed || ticks_since_emit_ >= k)) {
            Suggestion sg;
            sg.action = action;
            sg.rank = pick.rank;
            sg.label = label;
            sg.confidence = state->collective.confidence;
            sg.ts_ms = now_ms;
            char buf[160];
            std::snprintf(buf, sizeof buf, "class %s for %zu ticks (confidence %.2f); %s action for %s",
                          std::string(emotion_name(label)).c_str(), stable_ticks_, sg.confidence,
                          std::string(rank_name(pick.rank)).c_str(), std::string(emotion_name(label)).c_str());
            sg.rationale = buf;
            emitted = sg;
            last_emitted_ = sg;
            latest_suggestion_ = sg;
            ticks_since_emit_ = 0;
            pending_action_ = action;
        }
        latest_state_ = state;
    }
    const double latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    append_event({std::string(event_type::tick), now_ms,
                  {{"dt_ms", now_ms - last_tick_ms_},
                   {"skipped", skipped},
                   {"latency_ms", latency_ms},
                   {"state", state ? state->to_json() : nlohmann::json(nullptr)}}});
    last_tick_ms_ = now_ms;
    if (emitted) append_event({std::string(event_type::suggestion), now_ms, emitted->to_json()});
    return emitted;
}

std::map<std::string, std::size_t> Session::calibration_shortfall() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::size_t> out;
    for (const auto& r : roster_) {
        const auto n = calibration_.shortfall(r.student_id);
        if (n > 0) out[r.student_id] = n;
    }
    return out;
}

void Session::go_live(std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    if (status_ != SessionStatus::calibrating) {
        throw Error(Errc::conflict, id_, "cannot go live from status " + std::string(status_name(status_)));
    }
    nlohmann::json missing = nlohmann::json::object();
    for (const auto& r : roster_) {
        const auto n = calibration_.shortfall(r.student_id);
        if (n > 0) missing[r.student_id] = n;
    }
    if (!missing.empty()) {
        throw Error(Errc::conflict, "calibration", "students below the calibration minimum: " + missing.dump());
    }
    calibration_.freeze_all();
    status_ = SessionStatus::live;
    now_ms = std::max<std::int64_t>(now_ms, 0);
    last_tick_ms_ = now_ms;
    append_event({std::string(event_type::went_live), now_ms, {{"calibration", calibration_.to_json()}}});
    publish_locked();
}

void Session::record_action(Action action, ActionSource source, std::int64_t now_ms,
                            std::optional<std::string> student_id) {
    std::lock_guard lock(mu_);
    check_live("action");
    const std::size_t ai = action_index_[index_of(action)];
    nlohmann::json data{{"action", action_name(action)}, {"source", source_name(source)}};
    if (source == ActionSource::infeasible) {
        const auto still_feasible = std::count(infeasible_.begin(), infeasible_.end(), false) - (infeasible_[ai] ? 0 : 1);
        if (still_feasible <= 0) throw Error(Errc::conflict, "infeasible", "at least one action must stay feasible");
        infeasible_[ai] = true;
        if (pending_action_ == action) pending_action_.reset();
        append_event({std::string(event_type::action), now_ms, std::move(data)});
    } else {
        pending_action_ = action;
        append_event({std::string(event_type::action), now_ms, data});
        if (source == ActionSource::override_action) {
            nlohmann::json iv{{"kind", intervention_name(is_pace_action(action) ? InterventionKind::pace
                                                                                : InterventionKind::content)},
                              {"cause", "override"},
                              {"action", action_name(action)}};
            iv["student_id"] = student_id ? nlohmann::json(*student_id) : nlohmann::json(nullptr);
            append_event({std::string(event_type::intervention), now_ms, std::move(iv)});
        }
    }
    publish_locked();
}

void Session::record_intervention(InterventionKind kind, std::int64_t now_ms, std::optional<std::string> student_id) {
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::ended) throw Error(Errc::conflict, id_, "session has ended");
    nlohmann::json iv{{"kind", intervention_name(kind)}, {"cause", "manual"}};
    iv["student_id"] = student_id ? nlohmann::json(*student_id) : nlohmann::json(nullptr);
    append_event({std::string(event_type::intervention), now_ms, std::move(iv)});
    publish_locked();
}

void Session::end(std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::ended) throw Error(Errc::conflict, id_, "session already ended");
    status_ = SessionStatus::ended;
    append_event({std::string(event_type::session_ended), std::max<std::int64_t>(now_ms, 0), nlohmann::json::object()});
    publish_locked();
}

std::int64_t Session::data_clock_ms() const {
    std::lock_guard lock(mu_);
    return data_clock_ms_;
}

std::optional<CollectiveState> Session::latest_state() const {
    std::lock_guard lock(mu_);
    return latest_state_;
}

std::optional<Suggestion> Session::latest_suggestion() const {
    std::lock_guard lock(mu_);
    return latest_suggestion_;
}

std::vector<Action> Session::infeasible_actions() const {
    std::lock_guard lock(mu_);
    std::vector<Action> out;
    for (Action a : kActions)
        if (infeasible_[action_index_[index_of(a)]]) out.push_back(a);
    return out;
}

SessionMetrics Session::metrics() const {
    std::lock_guard lock(mu_);
    return metrics_;
}

std::vector<Event> Session::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

TransitionLog Session::transitions() const {
    std::lock_guard lock(mu_);
    return transitions_;
}

CalibrationState Session::calibration() const {
    std::lock_guard lock(mu_);
    return calibration_;
}

std::shared_ptr<const nlohmann::json> Session::snapshot() const { return std::atomic_load(&snapshot_); }

void Session::publish_locked() {
    nlohmann::json cal = nlohmann::json::object();
    for (const auto& r : roster_) {
        const auto* sc = calibration_.find(r.student_id);
        cal[r.student_id] = {{"count", sc ? sc->count : 0}, {"shortfall", calibration_.shortfall(r.student_id)}};
    }
    nlohmann::json infeasible = nlohmann::json::array();
    for (Action a : kActions)
        if (infeasible_[action_index_[index_of(a)]]) infeasible.push_back(action_name(a));
    auto j = std::make_shared<nlohmann::json>(nlohmann::json{
        {"session_id", id_},
        {"status", status_name(status_)},
        {"data_clock_ms", data_clock_ms_},
        {"collective", latest_state_ ? latest_state_->to_json() : nlohmann::json(nullptr)},
        {"suggestion", latest_suggestion_ ? latest_suggestion_->to_json() : nlohmann::json(nullptr)},
        {"metrics", metrics_.to_json()},
        {"infeasible", std::move(infeasible)},
        {"calibration", std::move(cal)}});
    std::atomic_store(&snapshot_, std::shared_ptr<const nlohmann::json>(std::move(j)));
}

}  // namespace affectloop

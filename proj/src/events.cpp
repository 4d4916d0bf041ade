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

#include "affectloop/events.hpp"

#include "affectloop/error.hpp"

namespace affectloop {

nlohmann::json Event::to_json() const {
    return {{"v", kEventSchemaVersion}, {"type", type}, {"ts_ms", ts_ms}, {"data", data}};
}

Event Event::from_json(const nlohmann::json& j) {
    try {
        const int v = j.at("v").get<int>();
        if (v != kEventSchemaVersion) throw Error(Errc::schema, "v", "unsupported event schema version " + std::to_string(v));
        Event e;
        e.type = j.at("type").get<std::string>();
        e.ts_ms = j.at("ts_ms").get<std::int64_t>();
        e.data = j.value("data", nlohmann::json::object());
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::schema, "event", ex.what());
    }
}

namespace {
std::size_t emotion_index(const std::string& name) {
    const auto e = emotion_from_name(name);
    if (!e) throw Error(Errc::schema, "label", "unknown emotion '" + name + "'");
    return index_of(*e);
}
}  // namespace

void SessionMetrics::apply(const Event& e) {
    if (e.type == event_type::went_live) {
        live_since_ms = e.ts_ms;
        last_ts_ms = e.ts_ms;
    } else if (e.type == event_type::tick) {
        const double dt_s = static_cast<double>(e.data.at("dt_ms").get<std::int64_t>()) / 1000.0;
        const auto& state = e.data.at("state");
        if (!state.is_null()) {
            for (const auto& [id, st] : state.at("students").items()) {
                student_dwell_s[id][emotion_index(st.at("label").get<std::string>())] += dt_s;
            }
            collective_dwell_s[emotion_index(state.at("collective").at("label").get<std::string>())] += dt_s;
        }
        latency_ms.push_back(e.data.at("latency_ms").get<double>());
        skipped_students += e.data.at("skipped").get<std::size_t>();
        ++ticks;
        last_ts_ms = e.ts_ms;
    } else if (e.type == event_type::suggestion) {
        ++suggestion_count;
    } else if (e.type == event_type::intervention) {
        ++intervention_count;
        if (e.data.contains("student_id") && e.data.at("student_id").is_string()) {
            ++student_interventions[e.data.at("student_id").get<std::string>()];
        }
    } else if (e.type == event_type::session_ended) {
        if (live_since_ms >= 0) last_ts_ms = std::max(last_ts_ms, e.ts_ms);
    }
}

double SessionMetrics::elapsed_minutes() const {
    if (live_since_ms < 0 || last_ts_ms <= live_since_ms) return 0.0;
    return static_cast<double>(last_ts_ms - live_since_ms) / 60000.0;
}

double SessionMetrics::intervention_rate() const {
    const double m = elapsed_minutes();
    return m > 0.0 ? static_cast<double>(intervention_count) / m : 0.0;
}

double SessionMetrics::intervention_rate_per_student(std::size_t roster_size) const {
    if (roster_size == 0) return 0.0;
    return intervention_rate() / static_cast<double>(roster_size);
}

std::array<double, kEmotionCount> SessionMetrics::mean_student_dwell_fraction() const {
    std::array<double, kEmotionCount> out{};
    std::size_t n = 0;
    for (const auto& [_, dwell] : student_dwell_s) {
        double total = 0.0;
        for (double d : dwell) total += d;
        if (total <= 0.0) continue;
        for (std::size_t i = 0; i < kEmotionCount; ++i) out[i] += dwell[i] / total;
        ++n;
    }
    if (n > 0)
        for (auto& v : out) v /= static_cast<double>(n);
    return out;
}

std::array<double, kEmotionCount> SessionMetrics::collective_dwell_fraction() const {
    std::array<double, kEmotionCount> out{};
    double total = 0.0;
    for (double d : collective_dwell_s) total += d;
    if (total > 0.0)
        for (std::size_t i = 0; i < kEmotionCount; ++i) out[i] = collective_dwell_s[i] / total;
    return out;
}

namespace {
nlohmann::json by_emotion(const std::array<double, kEmotionCount>& a) {
    nlohmann::json j = nlohmann::json::object();
    for (Emotion e : kEmotions) j[std::string(emotion_name(e))] = a[index_of(e)];
    return j;
}

std::array<double, kEmotionCount> from_by_emotion(const nlohmann::json& j) {
    std::array<double, kEmotionCount> a{};
    for (Emotion e : kEmotions) a[index_of(e)] = j.at(std::string(emotion_name(e))).get<double>();
    return a;
}
}  // namespace

nlohmann::json SessionMetrics::to_json() const {
    nlohmann::json students = nlohmann::json::object();
    for (const auto& [id, d] : student_dwell_s) students[id] = by_emotion(d);
    return {{"student_dwell_s", std::move(students)},
            {"collective_dwell_s", by_emotion(collective_dwell_s)},
            {"suggestion_count", suggestion_count},
            {"intervention_count", intervention_count},
            {"student_interventions", student_interventions},
            {"latency_ms", latency_ms},
            {"ticks", ticks},
            {"skipped_students", skipped_students},
            {"live_since_ms", live_since_ms},
            {"last_ts_ms", last_ts_ms},
            {"elapsed_minutes", elapsed_minutes()},
            {"interventions_per_minute", intervention_rate()},
            {"mean_student_dwell_fraction", by_emotion(mean_student_dwell_fraction())},
            {"collective_dwell_fraction", by_emotion(collective_dwell_fraction())}};
}

SessionMetrics SessionMetrics::from_json(const nlohmann::json& j) {
    try {
        SessionMetrics m;
        for (const auto& [id, d] : j.at("student_dwell_s").items()) m.student_dwell_s[id] = from_by_emotion(d);
        m.collective_dwell_s = from_by_emotion(j.at("collective_dwell_s"));
        m.suggestion_count = j.at("suggestion_count").get<std::size_t>();
        m.intervention_count = j.at("intervention_count").get<std::size_t>();
        m.student_interventions = j.at("student_interventions").get<std::map<std::string, std::size_t>>();
        m.latency_ms = j.at("latency_ms").get<std::vector<double>>();
        m.ticks = j.at("ticks").get<std::size_t>();
        m.skipped_students = j.at("skipped_students").get<std::size_t>();
        m.live_since_ms = j.at("live_since_ms").get<std::int64_t>();
        m.last_ts_ms = j.at("last_ts_ms").get<std::int64_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "metrics", e.what());
    }
}

SessionMetrics replay_metrics(std::span<const Event> events) {
    SessionMetrics m;
    for (const auto& e : events) m.apply(e);
    return m;
}

}  // namespace affectloop

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

// Append-only session log. Every mutation of a session is recorded as one
// event; SessionMetrics is a fold over the log, so replaying a stored log
// reproduces the live metrics exactly.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/affect.hpp"
#include "json.hpp"

namespace affectloop {

inline constexpr int kEventSchemaVersion = 1;

namespace event_type {
inline constexpr std::string_view session_created = "session_created";
inline constexpr std::string_view ingest = "ingest";
inline constexpr std::string_view went_live = "went_live";
inline constexpr std::string_view tick = "tick";
inline constexpr std::string_view suggestion = "suggestion";
inline constexpr std::string_view action = "action";
inline constexpr std::string_view intervention = "intervention";
inline constexpr std::string_view session_ended = "session_ended";
}  // namespace event_type

struct Event {
    std::string type;
    std::int64_t ts_ms = 0;
    nlohmann::json data = nlohmann::json::object();

    /// {"v":1,"type":...,"ts_ms":...,"data":{...}}
    nlohmann::json to_json() const;
    std::string to_line() const { return to_json().dump(); }
    static Event from_json(const nlohmann::json& j);

    bool operator==(const Event& other) const {
        return type == other.type && ts_ms == other.ts_ms && data == other.data;
    }
};

struct SessionMetrics {
    std::map<std::string, std::array<double, kEmotionCount>> student_dwell_s;
    std::array<double, kEmotionCount> collective_dwell_s{};
    std::size_t suggestion_count = 0;
    std::size_t intervention_count = 0;
    std::map<std::string, std::size_t> student_interventions;
    std::vector<double> latency_ms;
    std::size_t ticks = 0;
    std::size_t skipped_students = 0;
    std::int64_t live_since_ms = -1;
    std::int64_t last_ts_ms = -1;

    void apply(const Event& e);

    /// Minutes between going live and the last tick (or end).
    double elapsed_minutes() const;
    /// Class-level interventions per minute.
    double intervention_rate() const;
    /// Mean per-student interventions per minute over `roster_size` students.
    double intervention_rate_per_student(std::size_t roster_size) const;

    /// Per-emotion share of observed time, averaged over students.
    std::array<double, kEmotionCount> mean_student_dwell_fraction() const;
    std::array<double, kEmotionCount> collective_dwell_fraction() const;

    nlohmann::json to_json() const;
    static SessionMetrics from_json(const nlohmann::json& j);
    bool operator==(const SessionMetrics&) const = default;
};

SessionMetrics replay_metrics(std::span<const Event> events);

}  // namespace affectloop

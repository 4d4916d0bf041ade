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

// Per-session control loop: streams -> features -> calibrated VA -> emotion
// -> collective state -> policy lookup -> gated suggestion.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/affect.hpp"
#include "affectloop/calibration.hpp"
#include "affectloop/events.hpp"
#include "affectloop/features.hpp"
#include "affectloop/ingest.hpp"
#include "affectloop/mdp.hpp"
#include "affectloop/svr.hpp"
#include "json.hpp"

namespace affectloop {

enum class PacePreference { slow, medium, fast };
enum class ContentStyle { illustrations, descriptions };

struct StudentPreferences {
    PacePreference pace = PacePreference::medium;
    ContentStyle style = ContentStyle::descriptions;

    nlohmann::json to_json() const;
    static StudentPreferences from_json(const nlohmann::json& j);
    bool operator==(const StudentPreferences&) const = default;
};

struct RosterEntry {
    std::string student_id;
    StudentPreferences preferences;

    bool operator==(const RosterEntry&) const = default;
};

struct WeightedPoint {
    std::string student_id;
    VAPoint point;
    double weight = 1.0;
};

struct StudentReading {
    VAPoint point;
    double weight = 1.0;
    Emotion label = Emotion::bored;
    double confidence = 0.0;
};

struct CollectiveState {
    std::array<std::size_t, kEmotionCount> counts{};
    std::map<std::string, StudentReading> students;
    VAPoint centroid;
    EmotionState collective;
    std::size_t distinct_emotions = 0;
    std::int64_t ts_ms = 0;

    std::size_t reporting() const noexcept { return students.size(); }
    nlohmann::json to_json() const;
};

/// Weighted VA centroid, classified. Throws Error(insufficient_data) with no
/// points and Error(invalid_argument) for non-positive weights.
CollectiveState aggregate(std::span<const WeightedPoint> points, const FuzzyConfig& fuzzy = {});

struct ClassPreferences {
    PacePreference pace = PacePreference::medium;
    ContentStyle style = ContentStyle::descriptions;
};

/// Plurality vote; a tie on pace yields medium, a tie on style descriptions.
ClassPreferences majority(std::span<const StudentPreferences> prefs);

/// Adds `delta` (default 0.05 * max|Q|) to the Q values of the actions the
/// class prefers and re-derives the policy maps.
Policy apply_preferences(const Policy& policy, const ClassPreferences& prefs, std::optional<double> delta = std::nullopt);

struct Suggestion {
    Action action = Action::no_change;
    LookupRank rank = LookupRank::optimal;
    Emotion label = Emotion::bored;
    double confidence = 0.0;
    std::int64_t ts_ms = 0;
    std::string rationale;

    nlohmann::json to_json() const;
    static Suggestion from_json(const nlohmann::json& j);
};

enum class ActionSource { applied, override_action, infeasible };
std::string_view source_name(ActionSource s) noexcept;
std::optional<ActionSource> source_from_name(std::string_view name) noexcept;

enum class InterventionKind { pace, content };
std::string_view intervention_name(InterventionKind k) noexcept;
std::optional<InterventionKind> intervention_from_name(std::string_view name) noexcept;

enum class SessionStatus { calibrating, live, ended };
std::string_view status_name(SessionStatus s) noexcept;
std::optional<SessionStatus> status_from_name(std::string_view name) noexcept;

struct EngineConfig {
    std::size_t window = kDefaultWindow;
    std::int64_t tick_period_ms = 10'000;
    std::size_t stability_ticks = 3;
    std::optional<double> preference_delta;  // absolute; default 0.05 * max|Q|
    std::int64_t calibration_interval_ms = 1'000;
    std::size_t ring_capacity = kDefaultRingCapacity;
    FuzzyConfig fuzzy;
    CalibrationConfig calibration;

    nlohmann::json to_json() const;
    static EngineConfig from_json(const nlohmann::json& j);
};

struct LineResult {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<LineResult> errors;

    nlohmann::json to_json() const;
};

class Session {
public:
    using EventSink = std::function<void(const Event&)>;

    Session(std::string id, std::vector<RosterEntry> roster, std::shared_ptr<const VaRegressor> model,
            std::shared_ptr<const Policy> policy, EngineConfig config = {}, std::int64_t created_ms = 0);

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Called for every appended event, under the session lock.
    void set_sink(EventSink sink);

    const std::string& id() const noexcept { return id_; }
    const std::vector<RosterEntry>& roster() const noexcept { return roster_; }
    const EngineConfig& config() const noexcept { return config_; }
    const Policy& policy() const noexcept { return policy_; }
    SessionStatus status() const;

    /// Single sample. Advances the data clock; calibration steps and ticks
    /// due before the sample's timestamp run first. Not logged on its own.
    void ingest(const SensorSample& s);
    /// Batch of samples, partial accept; logs one ingest summary event.
    IngestReport ingest_batch(std::span<const SensorSample> samples);
    /// NDJSON body, one sample per line.
    IngestReport ingest_ndjson(std::string_view body);

    /// Runs a tick when the cadence has elapsed since the previous one.
    std::optional<Suggestion> tick(std::int64_t now_ms);

    /// Throws Error(conflict) unless calibrating and every student is calibrated.
    void go_live(std::int64_t now_ms);
    void go_live() { go_live(data_clock_ms()); }
    /// Per-student vectors still missing before go-live is allowed.
    std::map<std::string, std::size_t> calibration_shortfall() const;

    void record_action(Action action, ActionSource source, std::int64_t now_ms,
                       std::optional<std::string> student_id = std::nullopt);
    void record_intervention(InterventionKind kind, std::int64_t now_ms,
                             std::optional<std::string> student_id = std::nullopt);
    void end(std::int64_t now_ms);
    void end() { end(data_clock_ms()); }

    std::int64_t data_clock_ms() const;
    std::optional<CollectiveState> latest_state() const;
    std::optional<Suggestion> latest_suggestion() const;
    std::vector<Action> infeasible_actions() const;
    SessionMetrics metrics() const;
    std::vector<Event> events() const;
    TransitionLog transitions() const;
    CalibrationState calibration() const;

    /// Read-only view refreshed after every mutation; safe without the lock.
    std::shared_ptr<const nlohmann::json> snapshot() const;

private:
    void check_live(std::string_view what) const;
    void append_event(Event e);
    void ingest_locked(const SensorSample& s);
    void advance_locked(std::int64_t ts_ms);
    void calibration_step_locked(std::int64_t at_ms);
    std::optional<Suggestion> tick_locked(std::int64_t now_ms);
    void publish_locked();

    std::string id_;
    std::vector<RosterEntry> roster_;
    std::shared_ptr<const VaRegressor> model_;
    Policy policy_;
    EngineConfig config_;
    std::array<std::size_t, kEmotionCount> state_index_{};
    std::array<std::size_t, kActionCount> action_index_{};

    mutable std::mutex mu_;
    EventSink sink_;
    SessionStatus status_ = SessionStatus::calibrating;
    StreamSet streams_;
    CalibrationState calibration_;
    std::int64_t data_clock_ms_ = -1;
    std::int64_t next_calibration_ms_ = 0;
    std::int64_t last_tick_ms_ = 0;
    std::optional<CollectiveState> latest_state_;
    std::optional<Suggestion> latest_suggestion_;
    std::optional<Emotion> previous_label_;
    std::size_t stable_ticks_ = 0;
    std::optional<Suggestion> last_emitted_;
    std::size_t ticks_since_emit_ = 0;
    std::optional<Action> pending_action_;
    std::vector<bool> infeasible_;
    TransitionLog transitions_;
    std::vector<Event> events_;
    SessionMetrics metrics_;
    std::shared_ptr<const nlohmann::json> snapshot_;
};

}  // namespace affectloop

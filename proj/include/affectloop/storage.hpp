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

// File-backed session storage: {root}/{session_id}/ holds session.json,
// calibration.json, events.ndjson and metrics.json.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "affectloop/calibration.hpp"
#include "affectloop/engine.hpp"
#include "affectloop/events.hpp"
#include "json.hpp"

namespace affectloop {

struct SessionRecord {
    std::string session_id;
    std::vector<RosterEntry> roster;
    std::string model_id;
    std::string mdp_config_id;
    EngineConfig engine;
    SessionStatus status = SessionStatus::calibrating;
    std::int64_t created_ms = 0;
    std::optional<std::int64_t> ended_ms;

    nlohmann::json to_json() const;
    static SessionRecord from_json(const nlohmann::json& j);
    bool operator==(const SessionRecord& o) const {
        return to_json() == o.to_json();
    }
};

struct StoredSession {
    SessionRecord record;
    CalibrationState calibration;
    std::vector<Event> events;
    SessionMetrics metrics;
};

/// Appends events to an NDJSON file, flushing after every line.
class EventLogWriter {
public:
    explicit EventLogWriter(const std::filesystem::path& path);
    void append(const Event& e);

private:
    std::filesystem::path path_;
    std::mutex mu_;
    std::ofstream out_;
};

/// Parses an event log; a malformed or truncated line raises Error(corrupt)
/// naming the file and the byte offset where the line starts.
std::vector<Event> read_event_log(const std::filesystem::path& path);

class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path dir_for(const std::string& session_id) const;
    bool exists(const std::string& session_id) const;
    std::vector<std::string> list() const;

    void write_record(const SessionRecord& record) const;
    void write_calibration(const std::string& session_id, const CalibrationState& calibration) const;
    void write_metrics(const std::string& session_id, const SessionMetrics& metrics) const;
    void write_events(const std::string& session_id, const std::vector<Event>& events) const;

    /// Full snapshot of a session (record, calibration, whole event log, metrics).
    void persist(const SessionRecord& record, const Session& session) const;

    /// Throws Error(not_found) for an unknown id and Error(corrupt) for
    /// missing or damaged files, and when the stored metrics disagree with a
    /// replay of the event log.
    StoredSession load(const std::string& session_id) const;

private:
    std::filesystem::path root_;
};

}  // namespace affectloop

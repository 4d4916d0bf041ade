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

#include "affectloop/storage.hpp"

#include <algorithm>

#include "affectloop/config.hpp"
#include "affectloop/error.hpp"

namespace affectloop {

nlohmann::json SessionRecord::to_json() const {
    nlohmann::json roster_json = nlohmann::json::array();
    for (const auto& r : roster) roster_json.push_back({{"student_id", r.student_id}, {"preferences", r.preferences.to_json()}});
    return {{"session_id", session_id},
            {"roster", std::move(roster_json)},
            {"model_id", model_id},
            {"mdp_config_id", mdp_config_id},
            {"engine", engine.to_json()},
            {"status", status_name(status)},
            {"created_ms", created_ms},
            {"ended_ms", ended_ms ? nlohmann::json(*ended_ms) : nlohmann::json(nullptr)}};
}

SessionRecord SessionRecord::from_json(const nlohmann::json& j) {
    try {
        SessionRecord r;
        r.session_id = j.at("session_id").get<std::string>();
        for (const auto& e : j.at("roster"))
            r.roster.push_back({e.at("student_id").get<std::string>(), StudentPreferences::from_json(e.at("preferences"))});
        r.model_id = j.at("model_id").get<std::string>();
        r.mdp_config_id = j.at("mdp_config_id").get<std::string>();
        r.engine = EngineConfig::from_json(j.at("engine"));
        const auto st = status_from_name(j.at("status").get<std::string>());
        if (!st) throw Error(Errc::schema, "status", "unknown session status");
        r.status = *st;
        r.created_ms = j.at("created_ms").get<std::int64_t>();
        if (!j.at("ended_ms").is_null()) r.ended_ms = j.at("ended_ms").get<std::int64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "session record", e.what());
    }
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::app) {
    if (!out_) throw Error(Errc::io, path.string(), "cannot open event log for appending");
}

void EventLogWriter::append(const Event& e) {
    std::lock_guard lock(mu_);
    out_ << e.to_line() << '\n';
    out_.flush();
    if (!out_) throw Error(Errc::io, path_.string(), "event log write failed");
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::corrupt, path.string(), "event log is missing or unreadable");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<Event> events;
    std::size_t offset = 0;
    while (offset < text.size()) {
        const auto nl = text.find('\n', offset);
        if (nl == std::string::npos) {
            throw Error(Errc::corrupt, path.string(),
                        "truncated event at byte offset " + std::to_string(offset) + " (no line terminator)");
        }
        const std::string_view line(text.data() + offset, nl - offset);
        try {
            events.push_back(Event::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(Errc::corrupt, path.string(),
                        "malformed event at byte offset " + std::to_string(offset) + ": " + e.what());
        }
        offset = nl + 1;
    }
    return events;
}

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
        throw Error(Errc::io, root_.string(), "storage root is not a writable directory");
}

std::filesystem::path SessionStore::dir_for(const std::string& session_id) const {
    if (session_id.empty() || session_id.find_first_of("/\\") != std::string::npos || session_id == "." ||
        session_id == "..") {
        throw Error(Errc::invalid_argument, session_id, "not a valid session id");
    }
    return root_ / session_id;
}

bool SessionStore::exists(const std::string& session_id) const {
    return std::filesystem::is_directory(dir_for(session_id));
}

std::vector<std::string> SessionStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(root_))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "session.json"))
            ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

void SessionStore::write_record(const SessionRecord& record) const {
    const auto dir = dir_for(record.session_id);
    std::filesystem::create_directories(dir);
    write_json_file(dir / "session.json", record.to_json());
}

void SessionStore::write_calibration(const std::string& session_id, const CalibrationState& calibration) const {
    write_json_file(dir_for(session_id) / "calibration.json", calibration.to_json());
}

void SessionStore::write_metrics(const std::string& session_id, const SessionMetrics& metrics) const {
    write_json_file(dir_for(session_id) / "metrics.json", metrics.to_json());
}

void SessionStore::write_events(const std::string& session_id, const std::vector<Event>& events) const {
    const auto path = dir_for(session_id) / "events.ndjson";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, path.string(), "cannot write event log");
    for (const auto& e : events) out << e.to_line() << '\n';
    if (!out) throw Error(Errc::io, path.string(), "event log write failed");
}

void SessionStore::persist(const SessionRecord& record, const Session& session) const {
    write_record(record);
    write_calibration(record.session_id, session.calibration());
    write_events(record.session_id, session.events());
    write_metrics(record.session_id, session.metrics());
}

StoredSession SessionStore::load(const std::string& session_id) const {
    const auto dir = dir_for(session_id);
    if (!std::filesystem::is_directory(dir)) throw Error(Errc::not_found, session_id, "no stored session with this id");
    auto read = [&](const char* name) {
        const auto path = dir / name;
        if (!std::filesystem::exists(path)) throw Error(Errc::corrupt, path.string(), "file is missing");
        try {
            return read_json_file(path);
        } catch (const Error& e) {
            throw Error(Errc::corrupt, path.string(), e.detail());
        }
    };
    auto wrap = [&](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(Errc::corrupt, (dir / name).string(), e.detail());
        }
    };
    StoredSession s;
    const auto rec = read("session.json");
    s.record = wrap("session.json", [&] { return SessionRecord::from_json(rec); });
    const auto cal = read("calibration.json");
    s.calibration = wrap("calibration.json", [&] { return CalibrationState::from_json(cal); });
    s.events = read_event_log(dir / "events.ndjson");
    const auto met = read("metrics.json");
    s.metrics = wrap("metrics.json", [&] { return SessionMetrics::from_json(met); });
    if (!(replay_metrics(s.events) == s.metrics)) {
        throw Error(Errc::corrupt, (dir / "metrics.json").string(), "metrics disagree with a replay of events.ndjson");
    }
    return s;
}

}  // namespace affectloop

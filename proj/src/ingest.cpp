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

#include "affectloop/ingest.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "affectloop/error.hpp"
#include "json.hpp"

namespace affectloop {

std::string_view channel_name(Channel c) noexcept {
    switch (c) {
        case Channel::hr: return "hr";
        case Channel::rr: return "rr";
        case Channel::eda: return "eda";
        case Channel::temp: return "temp";
    }
    return "?";
}

std::optional<Channel> channel_from_name(std::string_view name) noexcept {
    for (Channel c : kChannels) {
        if (channel_name(c) == name) return c;
    }
    return std::nullopt;
}

ChannelRange channel_range(Channel c) noexcept {
    switch (c) {
        case Channel::hr: return {20.0, 250.0};
        case Channel::rr: return {200.0, 3000.0};
        case Channel::eda: return {0.0, 100.0};
        case Channel::temp: return {20.0, 45.0};
    }
    return {0.0, 0.0};
}

void validate_value(Channel c, double value) {
    if (!std::isfinite(value)) throw Error(Errc::range, "value", "value must be finite");
    const auto r = channel_range(c);
    if (!(value > r.lo && value < r.hi)) {
        throw Error(Errc::range, "value",
                    std::string(channel_name(c)) + " value " + std::to_string(value) + " outside (" +
                        std::to_string(r.lo) + ", " + std::to_string(r.hi) + ")");
    }
}

SensorSample parse_sample(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::parse, "", e.what());
    }
    if (!j.is_object()) throw Error(Errc::schema, "", "record must be a JSON object");

    auto field = [&](const char* name) -> const nlohmann::json& {
        auto it = j.find(name);
        if (it == j.end()) throw Error(Errc::schema, name, "missing field");
        return *it;
    };

    SensorSample s;
    const auto& sid = field("student_id");
    if (!sid.is_string() || sid.get_ref<const std::string&>().empty()) {
        throw Error(Errc::schema, "student_id", "must be a non-empty string");
    }
    s.student_id = sid.get<std::string>();

    const auto& ts = field("ts_ms");
    if (!ts.is_number_integer()) throw Error(Errc::schema, "ts_ms", "must be an integer");
    s.ts_ms = ts.get<std::int64_t>();
    if (s.ts_ms < 0) throw Error(Errc::range, "ts_ms", "must be non-negative");

    const auto& ch = field("channel");
    if (!ch.is_string()) throw Error(Errc::schema, "channel", "must be a string");
    const auto channel = channel_from_name(ch.get_ref<const std::string&>());
    if (!channel) throw Error(Errc::schema, "channel", "unknown channel '" + ch.get<std::string>() + "'");
    s.channel = *channel;

    const auto& v = field("value");
    if (!v.is_number()) throw Error(Errc::schema, "value", "must be a number");
    s.value = v.get<double>();
    validate_value(s.channel, s.value);
    return s;
}

std::string render_sample(const SensorSample& s) {
    nlohmann::ordered_json j;
    j["student_id"] = s.student_id;
    j["ts_ms"] = s.ts_ms;
    j["channel"] = channel_name(s.channel);
    j["value"] = s.value;
    return j.dump();
}

std::vector<double> StreamSnapshot::values(Channel c) const {
    const auto& r = readings(c);
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].value;
    return out;
}

StudentStream::StudentStream(std::string student_id, std::size_t capacity)
    : student_id_(std::move(student_id)),
      buffers_{RingBuffer<Reading>(capacity), RingBuffer<Reading>(capacity), RingBuffer<Reading>(capacity),
               RingBuffer<Reading>(capacity)} {
    last_ts_.fill(std::numeric_limits<std::int64_t>::min());
}

void StudentStream::append(const SensorSample& s) {
    std::lock_guard lock(mu_);
    const auto idx = index_of(s.channel);
    if (s.ts_ms < last_ts_[idx]) {
        throw Error(Errc::ordering, "ts_ms",
                    student_id_ + "/" + std::string(channel_name(s.channel)) + ": ts_ms " + std::to_string(s.ts_ms) +
                        " precedes " + std::to_string(last_ts_[idx]));
    }
    last_ts_[idx] = s.ts_ms;
    buffers_[idx].push({s.ts_ms, s.value});
    if (s.ts_ms > last_seen_ms_) last_seen_ms_ = s.ts_ms;
}

StreamSnapshot StudentStream::snapshot() const {
    std::lock_guard lock(mu_);
    StreamSnapshot snap;
    snap.student_id = student_id_;
    for (std::size_t i = 0; i < kChannelCount; ++i) snap.channels[i] = buffers_[i].to_vector();
    snap.last_seen_ms = last_seen_ms_;
    return snap;
}

std::size_t StudentStream::size(Channel c) const {
    std::lock_guard lock(mu_);
    return buffers_[index_of(c)].size();
}

std::int64_t StudentStream::last_seen_ms() const {
    std::lock_guard lock(mu_);
    return last_seen_ms_;
}

StudentStream& StreamSet::stream_for(const std::string& student_id) {
    {
        std::shared_lock lock(mu_);
        auto it = streams_.find(student_id);
        if (it != streams_.end()) return *it->second;
    }
    std::unique_lock lock(mu_);
    auto& slot = streams_[student_id];
    if (!slot) slot = std::make_unique<StudentStream>(student_id, capacity_);
    return *slot;
}

void StreamSet::ingest(const SensorSample& s) { stream_for(s.student_id).append(s); }

std::optional<StreamSnapshot> StreamSet::snapshot(std::string_view student_id) const {
    std::shared_lock lock(mu_);
    auto it = streams_.find(student_id);
    if (it == streams_.end()) return std::nullopt;
    return it->second->snapshot();
}

std::vector<std::string> StreamSet::students() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    out.reserve(streams_.size());
    for (const auto& [id, _] : streams_) out.push_back(id);
    return out;
}

std::shared_ptr<StreamSet> StreamRegistry::open(const std::string& session_id, std::size_t capacity) {
    std::unique_lock lock(mu_);
    auto& slot = sets_[session_id];
    if (!slot) slot = std::make_shared<StreamSet>(capacity);
    return slot;
}

void StreamRegistry::close(std::string_view session_id) {
    std::unique_lock lock(mu_);
    auto it = sets_.find(session_id);
    if (it != sets_.end()) sets_.erase(it);
}

std::shared_ptr<StreamSet> StreamRegistry::find(std::string_view session_id) const {
    std::shared_lock lock(mu_);
    auto it = sets_.find(session_id);
    return it == sets_.end() ? nullptr : it->second;
}

void StreamRegistry::ingest(std::string_view session_id, const SensorSample& s) {
    auto set = find(session_id);
    if (!set) throw Error(Errc::session, std::string(session_id), "unknown session");
    set->ingest(s);
}

ReplayStats replay_file(const std::filesystem::path& path, double speed_factor, const SampleSink& sink,
                        ReplayPacer pacer) {
    if (!(speed_factor >= 0.0) || !std::isfinite(speed_factor)) {
        throw Error(Errc::invalid_argument, "speed_factor", "must be finite and >= 0");
    }
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, path.string(), "cannot open replay file");

    if (!pacer) {
        const auto start = std::chrono::steady_clock::now();
        pacer = [start](std::chrono::duration<double> offset) {
            std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
        };
    }

    ReplayStats stats;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::int64_t> first_ts;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        SensorSample s;
        try {
            s = parse_sample(line);
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + " " + e.subject(), e.detail());
        }
        if (s.ts_ms < prev_ts) {
            throw Error(Errc::ordering, path.string() + ":" + std::to_string(line_no),
                        "ts_ms " + std::to_string(s.ts_ms) + " precedes " + std::to_string(prev_ts));
        }
        prev_ts = s.ts_ms;
        if (!first_ts) first_ts = s.ts_ms;
        if (speed_factor > 0.0) {
            const std::chrono::duration<double> offset(static_cast<double>(s.ts_ms - *first_ts) / 1000.0 / speed_factor);
            pacer(offset);
            stats.scheduled_span = offset;
        }
        sink(s);
        ++stats.emitted;
    }
    return stats;
}

}  // namespace affectloop

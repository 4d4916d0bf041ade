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
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/ring_buffer.hpp"

namespace affectloop {

enum class Channel { hr, rr, eda, temp };

inline constexpr std::array<Channel, 4> kChannels{Channel::hr, Channel::rr, Channel::eda, Channel::temp};
inline constexpr std::size_t kChannelCount = kChannels.size();
inline constexpr std::size_t kDefaultRingCapacity = 128;

constexpr std::size_t index_of(Channel c) noexcept { return static_cast<std::size_t>(c); }

std::string_view channel_name(Channel c) noexcept;
std::optional<Channel> channel_from_name(std::string_view name) noexcept;

/// Open interval of physically plausible values per channel. Samples
/// outside it are rejected, never clamped.
struct ChannelRange {
    double lo;
    double hi;
};
ChannelRange channel_range(Channel c) noexcept;

struct SensorSample {
    std::string student_id;
    std::int64_t ts_ms = 0;
    Channel channel = Channel::hr;
    double value = 0.0;

    bool operator==(const SensorSample&) const = default;
};

/// Throws Error(range) naming "value" when the value is non-finite or out of
/// the channel's range.
void validate_value(Channel c, double value);

/// Parses one NDJSON record. Unknown fields are ignored.
SensorSample parse_sample(std::string_view line);

/// Inverse of parse_sample; one line, no trailing newline.
std::string render_sample(const SensorSample& s);

struct Reading {
    std::int64_t ts_ms;
    double value;
};

/// Copy of one student's buffers at a point in time.
struct StreamSnapshot {
    std::string student_id;
    std::array<std::vector<Reading>, kChannelCount> channels;
    std::int64_t last_seen_ms = -1;

    const std::vector<Reading>& readings(Channel c) const { return channels[index_of(c)]; }
    std::vector<double> values(Channel c) const;
};

/// Per-student ring buffers, one per channel. Appends for one (student,
/// channel) must have non-decreasing timestamps.
class StudentStream {
public:
    explicit StudentStream(std::string student_id, std::size_t capacity = kDefaultRingCapacity);

    void append(const SensorSample& s);
    StreamSnapshot snapshot() const;
    std::size_t size(Channel c) const;
    std::int64_t last_seen_ms() const;
    const std::string& student_id() const noexcept { return student_id_; }

private:
    std::string student_id_;
    mutable std::mutex mu_;
    std::array<RingBuffer<Reading>, kChannelCount> buffers_;
    std::array<std::int64_t, kChannelCount> last_ts_;
    std::int64_t last_seen_ms_ = -1;
};

/// All streams of one session. Distinct students may be written concurrently.
class StreamSet {
public:
    explicit StreamSet(std::size_t capacity = kDefaultRingCapacity) : capacity_(capacity) {}

    void ingest(const SensorSample& s);
    std::optional<StreamSnapshot> snapshot(std::string_view student_id) const;
    std::vector<std::string> students() const;
    std::size_t capacity() const noexcept { return capacity_; }

private:
    StudentStream& stream_for(const std::string& student_id);

    std::size_t capacity_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::unique_ptr<StudentStream>, std::less<>> streams_;
};

/// Session-keyed stream sets.
class StreamRegistry {
public:
    std::shared_ptr<StreamSet> open(const std::string& session_id, std::size_t capacity = kDefaultRingCapacity);
    void close(std::string_view session_id);
    std::shared_ptr<StreamSet> find(std::string_view session_id) const;

    /// Throws Error(session) for an unknown session.
    void ingest(std::string_view session_id, const SensorSample& s);

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<StreamSet>, std::less<>> sets_;
};

using SampleSink = std::function<void(const SensorSample&)>;

/// Called with each record's scheduled offset from the start of replay.
/// The default pacer sleeps on the steady clock until that offset.
using ReplayPacer = std::function<void(std::chrono::duration<double>)>;

struct ReplayStats {
    std::size_t emitted = 0;
    std::chrono::duration<double> scheduled_span{0};
};

/// Streams an NDJSON sample file into `sink`, paced at real time divided by
/// `speed_factor` (0 = as fast as possible). Records must be sorted by ts_ms;
/// the first violation throws Error(ordering) after all earlier records were
/// emitted.
ReplayStats replay_file(const std::filesystem::path& path, double speed_factor, const SampleSink& sink,
                        ReplayPacer pacer = {});

}  // namespace affectloop

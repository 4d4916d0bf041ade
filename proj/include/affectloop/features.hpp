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
#include <optional>
#include <span>
#include <string_view>

#include "affectloop/ingest.hpp"

namespace affectloop {

inline constexpr std::size_t kDefaultWindow = 50;

/// The six physiological features, in dataset column order.
enum class Feature { scr, scl, hr, hrv, str, stl };

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<Feature, kFeatureCount> kFeatures{Feature::scr, Feature::scl, Feature::hr,
                                                             Feature::hrv, Feature::str, Feature::stl};

constexpr std::size_t index_of(Feature f) noexcept { return static_cast<std::size_t>(f); }
std::string_view feature_name(Feature f) noexcept;
std::optional<Feature> feature_from_name(std::string_view name) noexcept;

/// Levels (scl, hr, stl) are windowed means; responses (scr, str) are
/// windowed sample standard deviations and hrv is RMSSD over RR intervals.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::int64_t window_end_ts = 0;
    std::array<std::size_t, kChannelCount> sample_count_per_channel{};

    double operator[](Feature f) const { return values[index_of(f)]; }
    double& operator[](Feature f) { return values[index_of(f)]; }

    double scr() const { return (*this)[Feature::scr]; }
    double scl() const { return (*this)[Feature::scl]; }
    double hr() const { return (*this)[Feature::hr]; }
    double hrv() const { return (*this)[Feature::hrv]; }
    double str_resp() const { return (*this)[Feature::str]; }
    double stl() const { return (*this)[Feature::stl]; }
};

/// Mean of the most recent min(window, n) values.
double moving_average(std::span<const double> values, std::size_t window = kDefaultWindow);

/// Sample standard deviation (n-1) of the most recent min(window, n) values.
double running_deviation(std::span<const double> values, std::size_t window = kDefaultWindow);

/// Root mean square of successive differences over the most recent
/// min(window, n) RR intervals.
double rmssd(std::span<const double> rr_intervals, std::size_t window = kDefaultWindow);

/// Throws Error(warm_up) naming the first channel that lacks samples.
FeatureVector extract_features(const StreamSnapshot& stream, std::size_t window = kDefaultWindow);

}  // namespace affectloop

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

#include "affectloop/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "affectloop/error.hpp"
#include "affectloop/simd/kernels.hpp"

namespace affectloop {

std::string_view feature_name(Feature f) noexcept {
    switch (f) {
        case Feature::scr: return "scr";
        case Feature::scl: return "scl";
        case Feature::hr: return "hr";
        case Feature::hrv: return "hrv";
        case Feature::str: return "str";
        case Feature::stl: return "stl";
    }
    return "?";
}

std::optional<Feature> feature_from_name(std::string_view name) noexcept {
    for (Feature f : kFeatures) {
        if (feature_name(f) == name) return f;
    }
    return std::nullopt;
}

namespace {

std::span<const double> tail(std::span<const double> values, std::size_t window, std::size_t min_count,
                             const char* what) {
    if (window == 0) throw Error(Errc::invalid_argument, "window", "window must be positive");
    const std::size_t n = values.size() < window ? values.size() : window;
    if (n < min_count) {
        throw Error(Errc::insufficient_data, what,
                    "need at least " + std::to_string(min_count) + " values, have " + std::to_string(n));
    }
    return values.last(n);
}

// Rounded means would leave a tiny nonzero spread on constant windows.
bool is_constant(std::span<const double> w) {
    return std::adjacent_find(w.begin(), w.end(), std::not_equal_to<>()) == w.end();
}

}  // namespace

double moving_average(std::span<const double> values, std::size_t window) {
    const auto w = tail(values, window, 1, "moving_average");
    if (is_constant(w)) return w.front();
    return simd::sum(w) / static_cast<double>(w.size());
}

double running_deviation(std::span<const double> values, std::size_t window) {
    const auto w = tail(values, window, 2, "running_deviation");
    if (is_constant(w)) return 0.0;
    // Two passes; the single-pass sum-of-squares form cancels badly on
    // physiological levels with small spread.
    const double mean = simd::sum(w) / static_cast<double>(w.size());
    return std::sqrt(simd::sum_sq_dev(w, mean) / static_cast<double>(w.size() - 1));
}

double rmssd(std::span<const double> rr_intervals, std::size_t window) {
    const auto w = tail(rr_intervals, window, 2, "rmssd");
    return std::sqrt(simd::sum_sq_successive_diff(w) / static_cast<double>(w.size() - 1));
}

FeatureVector extract_features(const StreamSnapshot& stream, std::size_t window) {
    struct Need {
        Channel channel;
        std::size_t min;
    };
    // eda and temp feed deviation features, rr feeds RMSSD.
    constexpr std::array<Need, 4> needs{{{Channel::eda, 2}, {Channel::hr, 1}, {Channel::rr, 2}, {Channel::temp, 2}}};

    FeatureVector fv;
    for (const auto& need : needs) {
        const std::size_t have = stream.readings(need.channel).size();
        if (have < need.min) {
            throw Error(Errc::warm_up, std::string(channel_name(need.channel)),
                        stream.student_id + ": " + std::to_string(have) + " samples, need " + std::to_string(need.min));
        }
    }
    for (Channel c : kChannels) {
        fv.sample_count_per_channel[index_of(c)] = std::min(stream.readings(c).size(), window);
    }

    const auto eda = stream.values(Channel::eda);
    const auto hr = stream.values(Channel::hr);
    const auto rr = stream.values(Channel::rr);
    const auto temp = stream.values(Channel::temp);

    fv[Feature::scl] = moving_average(eda, window);
    fv[Feature::scr] = running_deviation(eda, window);
    fv[Feature::hr] = moving_average(hr, window);
    fv[Feature::hrv] = rmssd(rr, window);
    fv[Feature::stl] = moving_average(temp, window);
    fv[Feature::str] = running_deviation(temp, window);
    fv.window_end_ts = stream.last_seen_ms;
    return fv;
}

}  // namespace affectloop

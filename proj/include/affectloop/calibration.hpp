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
#include <map>
#include <string>
#include <string_view>

#include "affectloop/features.hpp"
#include "json.hpp"

namespace affectloop {

/// Output range of normalized features.
enum class FeatureSpace {
    unit,       // [0, 1]
    symmetric,  // [-1, 1], i.e. 2f' - 1
};

std::string_view feature_space_name(FeatureSpace s) noexcept;
FeatureSpace feature_space_from_name(std::string_view name);

struct CalibrationConfig {
    std::size_t min_samples = 50;
    // Extrema freeze once this many vectors were seen; 0 disables the
    // automatic freeze (offline datasets calibrate over every row).
    std::size_t freeze_after = 300;
    FeatureSpace space = FeatureSpace::unit;
};

struct Extrema {
    double f_min = 0.0;
    double f_max = 0.0;
};

struct StudentCalibration {
    std::array<Extrema, kFeatureCount> extrema{};
    std::size_t count = 0;
    bool frozen = false;
};

struct CalibratedFeatures {
    std::array<double, kFeatureCount> values{};
    // Set where f_max == f_min; the value is then the range midpoint.
    std::array<bool, kFeatureCount> low_variance{};

    bool any_low_variance() const {
        for (bool b : low_variance)
            if (b) return true;
        return false;
    }
};

/// Per-student local min-max normalization. Not internally synchronized:
/// each student has one writer and readers see frozen extrema.
class CalibrationState {
public:
    explicit CalibrationState(CalibrationConfig config = {}) : config_(config) {}

    /// Widens the student's extrema to include `values`. Ignored once the
    /// student's epoch is frozen; returns whether the state changed.
    bool update_extrema(const std::string& student_id, const std::array<double, kFeatureCount>& values);
    bool update_extrema(const std::string& student_id, const FeatureVector& fv) {
        return update_extrema(student_id, fv.values);
    }

    void freeze(const std::string& student_id);
    void freeze_all();

    /// Throws Error(calibration_required) while count < min_samples.
    CalibratedFeatures normalize(std::string_view student_id, const std::array<double, kFeatureCount>& values) const;
    CalibratedFeatures normalize(std::string_view student_id, const FeatureVector& fv) const {
        return normalize(student_id, fv.values);
    }

    const StudentCalibration* find(std::string_view student_id) const;
    bool is_calibrated(std::string_view student_id) const;
    /// Vectors still needed before normalize() is allowed.
    std::size_t shortfall(std::string_view student_id) const;

    const CalibrationConfig& config() const noexcept { return config_; }
    const std::map<std::string, StudentCalibration, std::less<>>& students() const noexcept { return students_; }

    nlohmann::json to_json() const;
    static CalibrationState from_json(const nlohmann::json& j);

private:
    CalibrationConfig config_;
    std::map<std::string, StudentCalibration, std::less<>> students_;
};

/// The normalization map on its own, for a single value.
double normalize_value(double f, const Extrema& e, FeatureSpace space, bool* low_variance = nullptr);

}  // namespace affectloop

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

#include "affectloop/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "affectloop/error.hpp"

namespace affectloop {

std::string_view feature_space_name(FeatureSpace s) noexcept {
    return s == FeatureSpace::unit ? "unit" : "symmetric";
}

FeatureSpace feature_space_from_name(std::string_view name) {
    if (name == "unit") return FeatureSpace::unit;
    if (name == "symmetric") return FeatureSpace::symmetric;
    throw Error(Errc::schema, "feature_space", "expected 'unit' or 'symmetric', got '" + std::string(name) + "'");
}

double normalize_value(double f, const Extrema& e, FeatureSpace space, bool* low_variance) {
    double unit;
    const bool degenerate = !(e.f_max > e.f_min);
    if (degenerate) {
        unit = 0.5;
    } else {
        unit = std::clamp((f - e.f_min) / (e.f_max - e.f_min), 0.0, 1.0);
    }
    if (low_variance) *low_variance = degenerate;
    return space == FeatureSpace::unit ? unit : 2.0 * unit - 1.0;
}

bool CalibrationState::update_extrema(const std::string& student_id, const std::array<double, kFeatureCount>& values) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(values[i])) {
            throw Error(Errc::precondition, std::string(feature_name(kFeatures[i])), "feature value must be finite");
        }
    }
    auto& st = students_[student_id];
    if (st.frozen) return false;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        auto& e = st.extrema[i];
        if (st.count == 0) {
            e = {values[i], values[i]};
        } else {
            e.f_min = std::min(e.f_min, values[i]);
            e.f_max = std::max(e.f_max, values[i]);
        }
    }
    ++st.count;
    if (config_.freeze_after > 0 && st.count >= config_.freeze_after) st.frozen = true;
    return true;
}

void CalibrationState::freeze(const std::string& student_id) { students_[student_id].frozen = true; }

void CalibrationState::freeze_all() {
    for (auto& [_, st] : students_) st.frozen = true;
}

const StudentCalibration* CalibrationState::find(std::string_view student_id) const {
    auto it = students_.find(student_id);
    return it == students_.end() ? nullptr : &it->second;
}

bool CalibrationState::is_calibrated(std::string_view student_id) const { return shortfall(student_id) == 0; }

std::size_t CalibrationState::shortfall(std::string_view student_id) const {
    const auto* st = find(student_id);
    const std::size_t have = st ? st->count : 0;
    const std::size_t need = std::max<std::size_t>(config_.min_samples, 1);
    return have >= need ? 0 : need - have;
}

CalibratedFeatures CalibrationState::normalize(std::string_view student_id,
                                               const std::array<double, kFeatureCount>& values) const {
    if (const auto missing = shortfall(student_id); missing > 0) {
        throw Error(Errc::calibration_required, std::string(student_id),
                    "needs " + std::to_string(missing) + " more calibration vectors");
    }
    const auto& st = *find(student_id);
    CalibratedFeatures out;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        bool low = false;
        out.values[i] = normalize_value(values[i], st.extrema[i], config_.space, &low);
        out.low_variance[i] = low;
    }
    return out;
}

nlohmann::json CalibrationState::to_json() const {
    nlohmann::json students = nlohmann::json::object();
    for (const auto& [id, st] : students_) {
        nlohmann::json per = nlohmann::json::object();
        for (Feature f : kFeatures) {
            const auto& e = st.extrema[index_of(f)];
            per[std::string(feature_name(f))] = {
                {"f_min", e.f_min}, {"f_max", e.f_max}, {"count", st.count}, {"frozen", st.frozen}};
        }
        students[id] = std::move(per);
    }
    return {{"version", 1},
            {"feature_space", feature_space_name(config_.space)},
            {"min_samples", config_.min_samples},
            {"freeze_after", config_.freeze_after},
            {"students", std::move(students)}};
}

CalibrationState CalibrationState::from_json(const nlohmann::json& j) {
    try {
        CalibrationConfig cfg;
        cfg.space = feature_space_from_name(j.at("feature_space").get<std::string>());
        cfg.min_samples = j.at("min_samples").get<std::size_t>();
        cfg.freeze_after = j.at("freeze_after").get<std::size_t>();
        CalibrationState state(cfg);
        for (const auto& [id, per] : j.at("students").items()) {
            StudentCalibration st;
            bool first = true;
            for (Feature f : kFeatures) {
                const auto& e = per.at(std::string(feature_name(f)));
                auto& ex = st.extrema[index_of(f)];
                ex.f_min = e.at("f_min").get<double>();
                ex.f_max = e.at("f_max").get<double>();
                if (ex.f_min > ex.f_max) {
                    throw Error(Errc::schema, id + "/" + std::string(feature_name(f)), "f_min exceeds f_max");
                }
                const auto count = e.at("count").get<std::size_t>();
                const auto frozen = e.at("frozen").get<bool>();
                if (first) {
                    st.count = count;
                    st.frozen = frozen;
                    first = false;
                }
            }
            state.students_[id] = st;
        }
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "calibration", e.what());
    }
}

}  // namespace affectloop

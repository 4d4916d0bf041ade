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

// Labeled feature datasets: CSV files with raw features and 1..9 ratings,
// a parallel ground-truth file, calibration of whole datasets and 4-class
// evaluation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "affectloop/affect.hpp"
#include "affectloop/calibration.hpp"
#include "affectloop/features.hpp"
#include "affectloop/svr.hpp"
#include "json.hpp"

namespace affectloop {

inline constexpr const char* kDatasetHeader = "user_id,stimulus_id,scr,scl,hr,hrv,str,stl,valence,arousal";
inline constexpr const char* kTruthHeader = "user_id,stimulus_id,valence,arousal,emotion";

struct DatasetRow {
    std::string user_id;
    std::string stimulus_id;
    std::array<double, kFeatureCount> features{};  // raw
    double valence = 5.0;                          // rating, 1..9
    double arousal = 5.0;

    bool operator==(const DatasetRow&) const = default;
};

struct TruthRow {
    std::string user_id;
    std::string stimulus_id;
    VAPoint va;  // [-1, 1]
    Emotion emotion = Emotion::bored;

    bool operator==(const TruthRow&) const = default;
};

void write_dataset_csv(const std::filesystem::path& path, std::span<const DatasetRow> rows);
std::vector<DatasetRow> read_dataset_csv(const std::filesystem::path& path);
void write_truth_csv(const std::filesystem::path& path, std::span<const TruthRow> rows);
std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path);

enum class CalibrationMode {
    personalized,  // per-user extrema
    population,    // one set of extrema pooled over every user
};

/// Calibrates every row against extrema taken over the whole dataset, grouped
/// per user or pooled.
std::vector<TrainingRow> calibrate_rows(std::span<const DatasetRow> rows, CalibrationMode mode,
                                        FeatureSpace space = FeatureSpace::unit);

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kEmotionCount>, kEmotionCount> counts{};  // [true][predicted]

    void add(Emotion truth, Emotion predicted) { ++counts[index_of(truth)][index_of(predicted)]; }
    std::size_t total() const;
    double accuracy() const;
    /// Row-normalized; empty rows stay zero.
    std::array<std::array<double, kEmotionCount>, kEmotionCount> proportions() const;
    nlohmann::json to_json() const;
    void write_csv(const std::filesystem::path& path) const;
};

/// Predicts labels for `which` rows of `calibrated` and compares with truth.
ConfusionMatrix evaluate_regressor(const VaRegressor& model, std::span<const TrainingRow> calibrated,
                                   std::span<const TruthRow> truth, std::span<const std::size_t> which,
                                   const FuzzyConfig& fuzzy = {});

/// k-nearest-neighbour baseline: neighbours' rescaled ratings are averaged in
/// VA space, then classified like the regressor output.
ConfusionMatrix evaluate_knn(std::span<const TrainingRow> calibrated, std::span<const TruthRow> truth,
                             std::span<const std::size_t> reference, std::span<const std::size_t> which,
                             std::size_t k = 5, const FuzzyConfig& fuzzy = {});

/// Throws Error(schema) unless the two files describe the same rows in order.
void check_aligned(std::span<const DatasetRow> rows, std::span<const TruthRow> truth);

std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace affectloop

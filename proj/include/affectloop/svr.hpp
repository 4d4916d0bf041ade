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

// Epsilon-insensitive support vector regression with a Gaussian kernel,
// solved in the dual by sequential minimal optimization (second-order
// working-set selection), and the two-target valence/arousal regressor
// built on it.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "affectloop/affect.hpp"
#include "affectloop/calibration.hpp"
#include "affectloop/features.hpp"
#include "json.hpp"

namespace affectloop {

/// sqrt(d)/4 for d = 6 predictors.
inline const double kDefaultKernelScale = std::sqrt(6.0) / 4.0;

struct SvrParams {
    double kernel_scale = kDefaultKernelScale;  // k(x,y) = exp(-|x-y|^2 / (2 s^2))
    double c = 1.0;
    double epsilon = 0.1;
    double tolerance = 1e-4;  // stop when the maximal KKT violation pair gap drops below this
    std::size_t max_iterations = 10'000'000;
};

/// One trained target: f(x) = sum_k coef_k k(sv_k, x) + bias.
class SvrModel {
public:
    SvrModel() = default;
    SvrModel(SvrParams params, std::size_t dims, std::vector<double> sv_rows, std::vector<double> coefficients,
             double bias);

    double predict(std::span<const double> x) const;

    const SvrParams& params() const noexcept { return params_; }
    std::size_t dims() const noexcept { return dims_; }
    std::size_t support_count() const noexcept { return coef_.size(); }
    double bias() const noexcept { return bias_; }
    const std::vector<double>& coefficients() const noexcept { return coef_; }
    /// Support vectors, row-major (support_count x dims).
    const std::vector<double>& support_rows() const noexcept { return rows_; }

    nlohmann::json to_json() const;
    static SvrModel from_json(const nlohmann::json& j, std::size_t dims);

private:
    SvrParams params_;
    std::size_t dims_ = 0;
    std::vector<double> rows_;
    std::vector<double> cols_;  // feature-major copy for the distance kernel
    std::vector<double> coef_;
    double bias_ = 0.0;
};

struct SvrFit {
    SvrModel model;
    // alpha_i - alpha*_i for every training point, in input order.
    std::vector<double> beta;
    std::size_t iterations = 0;
    double final_gap = 0.0;
    bool converged = false;
};

/// `x` is row-major (targets.size() x dims).
SvrFit train_svr(std::span<const double> x, std::size_t dims, std::span<const double> targets, const SvrParams& params);

/// (v - 5) / 4: maps a 1..9 rating into [-1, 1].
constexpr double rescale_label(double rating) { return (rating - 5.0) / 4.0; }

struct TrainingRow {
    std::array<double, kFeatureCount> x{};  // calibrated features
    double valence = 5.0;                   // 1..9
    double arousal = 5.0;                   // 1..9
};

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;

    /// Parses "70:15:15" style ratios.
    static SplitRatios parse(std::string_view text);
};

struct RowSplit {
    std::vector<std::size_t> train, validation, test;
};

/// Seeded shuffle of 0..n-1 cut by `ratios`; train_regressor uses the same split.
RowSplit split_rows(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

/// Whole groups (users) are assigned to one part; ratios apply to the group
/// count, rounded, with at least one group per part.
RowSplit split_groups(std::span<const std::string> group_of_row, const SplitRatios& ratios, std::uint64_t seed);

struct TrainOptions {
    SvrParams center;
    bool grid_search = true;
    SplitRatios split;
    std::uint64_t seed = 0;
    FeatureSpace space = FeatureSpace::unit;
    // Optional group label per row; when set the split keeps groups whole.
    std::vector<std::string> groups;
};

struct TargetReport {
    SvrParams chosen;
    double train_rmse = 0.0;
    double validation_rmse = 0.0;
    double test_rmse = 0.0;
    std::size_t support_vectors = 0;
};

struct TrainingReport {
    TargetReport valence;
    TargetReport arousal;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> validation_rows;
    std::vector<std::size_t> test_rows;

    nlohmann::json to_json() const;
};

/// Maps calibrated six-feature vectors to a VA point.
class VaRegressor {
public:
    VaRegressor() = default;
    VaRegressor(SvrModel valence, SvrModel arousal, FeatureSpace space)
        : valence_(std::move(valence)), arousal_(std::move(arousal)), space_(space), trained_(true) {}

    bool trained() const noexcept { return trained_; }
    FeatureSpace feature_space() const noexcept { return space_; }
    const SvrModel& valence_model() const noexcept { return valence_; }
    const SvrModel& arousal_model() const noexcept { return arousal_; }

    nlohmann::json to_json() const;
    static VaRegressor from_json(const nlohmann::json& j);
    static VaRegressor load(const std::string& path);
    void save(const std::string& path) const;

private:
    SvrModel valence_;
    SvrModel arousal_;
    FeatureSpace space_ = FeatureSpace::unit;
    bool trained_ = false;
};

struct TrainResult {
    VaRegressor model;
    TrainingReport report;
};

inline constexpr std::size_t kMinTrainingRows = 30;

TrainResult train_regressor(std::span<const TrainingRow> rows, const TrainOptions& options = {});

/// Both outputs clamped to [-1, 1]. Throws Error(untrained) or
/// Error(precondition) for inputs outside the model's feature space.
VAPoint predict_va(const VaRegressor& model, const std::array<double, kFeatureCount>& x);

}  // namespace affectloop

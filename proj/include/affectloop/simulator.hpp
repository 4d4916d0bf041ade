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

// Synthetic students. Features are an affine function of the latent
// (valence, arousal) point with per-user baselines and gains plus Gaussian
// noise; latent emotions move through per-action Markov chains.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "affectloop/affect.hpp"
#include "affectloop/dataset.hpp"
#include "affectloop/engine.hpp"
#include "affectloop/events.hpp"
#include "affectloop/features.hpp"
#include "affectloop/ingest.hpp"
#include "affectloop/mdp.hpp"
#include "affectloop/svr.hpp"
#include "json.hpp"

namespace affectloop {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct FeatureSignal {
    Interval baseline;
    double valence = 0.0;  // slope per unit valence, scaled by the user's gain
    double arousal = 0.0;
    double offset = 0.0;   // gain-scaled constant term
    double noise = 0.0;    // row-level noise sd in generated datasets
};

struct SignalModel {
    std::array<FeatureSignal, kFeatureCount> features;
    Interval gain{0.5, 2.0};
    double hr_sample_noise = 1.0;  // beats/min, stream model
    double rating_noise = 0.25;    // rating sd on the 1..9 scale

    static SignalModel defaults();
    nlohmann::json to_json() const;
    static SignalModel from_json(const nlohmann::json& j);
};

using LatentMatrix = std::array<std::array<double, kEmotionCount>, kEmotionCount>;

struct LatentDynamics {
    std::array<LatentMatrix, kActionCount> transitions{};  // [action][from][to]
    std::array<double, kEmotionCount> initial{0.25, 0.25, 0.25, 0.25};
    double period_s = 30.0;
    double va_jitter = 0.2;  // uniform half-width around the emotion center

    /// Every action maps to the identity.
    static LatentDynamics identity();
    void validate() const;
    nlohmann::json to_json() const;
    static LatentDynamics from_json(const nlohmann::json& j);
};

struct CalibrationProtocol {
    std::vector<VAPoint> points;
    double hold_s = 60.0;

    double duration_s() const { return hold_s * static_cast<double>(points.size()); }
};

struct Preset {
    std::string name;
    SignalModel signal;
    LatentDynamics dynamics;
    CalibrationProtocol protocol;
    double action_hold_s = 30.0;

    nlohmann::json to_json() const;
    static Preset from_json(const nlohmann::json& j);
    /// A file path, or the name of a preset shipped in presets/.
    static Preset load(const std::string& name_or_path);
};

struct UserProfile {
    std::string user_id;
    std::array<double, kFeatureCount> baseline{};
    std::array<double, kFeatureCount> gain{};
};

UserProfile draw_profile(std::string user_id, const SignalModel& model, std::mt19937_64& rng, bool identity_gains = false);

/// Noise-free features of `user` at `va`, scaled by `gain_scale`.
std::array<double, kFeatureCount> expected_features(const UserProfile& user, const SignalModel& model, const VAPoint& va,
                                                    double gain_scale = 1.0);

struct DatasetConfig {
    std::size_t users = 10;
    std::size_t rows_per_user = 200;
    std::uint64_t seed = 0;
    double noise_scale = 1.0;
    double gain_scale = 1.0;
    bool identity_gains = false;
    std::optional<VAPoint> fixed_va;  // every row at this point
    double va_extent = 0.95;          // ground truth drawn from [-extent, extent]^2
};

struct GeneratedDataset {
    std::vector<DatasetRow> rows;
    std::vector<TruthRow> truth;
    std::vector<UserProfile> users;
};

GeneratedDataset generate_dataset(const DatasetConfig& config, const SignalModel& model = SignalModel::defaults());

/// Rows for given profiles, sharing the config's noise and VA settings.
GeneratedDataset generate_dataset_for(const std::vector<UserProfile>& users, const DatasetConfig& config,
                                      const SignalModel& model = SignalModel::defaults());

struct SyntheticStudent {
    std::string student_id;
    UserProfile profile;
    Emotion latent = Emotion::bored;
    VAPoint va;
    std::optional<VAPoint> forced_va;  // overrides the latent point; latent transitions pause
    std::int64_t clock_ms = 0;
    double latent_elapsed_s = 0.0;
    double pending_s = 0.0;  // time not yet emitted as whole samples
    std::mt19937_64 rng;

    VAPoint current_va() const { return forced_va ? *forced_va : va; }
};

SyntheticStudent make_student(std::string student_id, const UserProfile& profile, Emotion initial, double va_jitter,
                              std::uint64_t seed);

struct StepResult {
    std::vector<SensorSample> samples;
    std::size_t transitions = 0;
};

/// Advances `dt_s` seconds: one latent transition per completed latent
/// period under `applied`, and one sample per channel for every whole second.
StepResult step_student(SyntheticStudent& st, Action applied, double dt_s, const LatentDynamics& dynamics,
                        const SignalModel& model);
/// Same, with the action given by name; throws Error(invalid_argument) for unknown names.
StepResult step_student(SyntheticStudent& st, std::string_view applied, double dt_s, const LatentDynamics& dynamics,
                        const SignalModel& model);

struct ScenarioConfig {
    std::size_t students = 10;
    double minutes = 30.0;
    bool controller = true;
    std::string preset = "decay-to-bored";
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

struct ClosedLoopResult {
    ScenarioConfig config;
    SessionMetrics metrics;
    std::vector<Event> events;
    std::array<double, kEmotionCount> latent_dwell_fraction{};
    double recognition_accuracy = 0.0;  // per-student tick labels against latent emotions
    std::size_t actions_applied = 0;
    std::int64_t live_since_ms = 0;
    std::int64_t ended_ms = 0;

    /// Deterministic under the seed: wall-clock latency samples are left out.
    nlohmann::json report() const;
};

ClosedLoopResult run_closed_loop(const ScenarioConfig& config, const Preset& preset,
                                 std::shared_ptr<const VaRegressor> model, std::shared_ptr<const Policy> policy,
                                 const EngineConfig& engine = {});

struct StreamTrainingConfig {
    std::size_t users = 6;
    double minutes_per_user = 16.0;
    double sample_every_s = 10.0;
    Interval hold_s{30.0, 90.0};
    std::uint64_t seed = 0;
    bool grid_search = true;
};

/// Labeled rows produced through the same stream -> window -> calibration path
/// the engine uses; labels are the window-averaged latent VA as 1..9 ratings.
std::vector<TrainingRow> stream_training_rows(const Preset& preset, const StreamTrainingConfig& config,
                                              std::size_t window = kDefaultWindow);

VaRegressor train_stream_model(const Preset& preset, const StreamTrainingConfig& config = {});

}  // namespace affectloop

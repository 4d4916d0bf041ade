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
#include <optional>
#include <string_view>

#include "json.hpp"

namespace affectloop {

/// The four learning emotions. Declaration order is the tie-break order.
enum class Emotion { bored, satisfied, curious, confused };

inline constexpr std::size_t kEmotionCount = 4;
inline constexpr std::array<Emotion, kEmotionCount> kEmotions{Emotion::bored, Emotion::satisfied, Emotion::curious,
                                                             Emotion::confused};

constexpr std::size_t index_of(Emotion e) noexcept { return static_cast<std::size_t>(e); }
std::string_view emotion_name(Emotion e) noexcept;
std::optional<Emotion> emotion_from_name(std::string_view name) noexcept;

/// A point in the valence/arousal plane; both axes in [-1, 1].
struct VAPoint {
    double valence = 0.0;
    double arousal = 0.0;

    bool operator==(const VAPoint&) const = default;
};

struct EmotionState {
    std::array<double, kEmotionCount> memberships{};
    Emotion label = Emotion::bored;
    double confidence = 0.0;

    double membership(Emotion e) const { return memberships[index_of(e)]; }
};

/// Gaussian membership around one center per emotion. Defaults place the
/// emotions on the circumplex quadrants (valence right, arousal up).
struct FuzzyConfig {
    std::array<VAPoint, kEmotionCount> centers{{
        {-0.5, -0.5},  // bored
        {+0.5, -0.5},  // satisfied
        {+0.5, +0.5},  // curious
        {-0.5, +0.5},  // confused
    }};
    double sigma = 0.35;

    const VAPoint& center(Emotion e) const { return centers[index_of(e)]; }

    nlohmann::json to_json() const;
    static FuzzyConfig from_json(const nlohmann::json& j);
};

/// Throws Error(precondition) unless both coordinates are finite and in
/// [-1, 1].
void check_va_bounds(const VAPoint& p);

/// Normalized memberships and the argmax label (first emotion wins ties).
EmotionState classify_emotion(const VAPoint& p, const FuzzyConfig& config = {});

nlohmann::json to_json(const VAPoint& p);
nlohmann::json to_json(const EmotionState& s);

}  // namespace affectloop

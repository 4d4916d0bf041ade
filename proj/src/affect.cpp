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

#include "affectloop/affect.hpp"

#include <cmath>
#include <string>

#include "affectloop/error.hpp"

namespace affectloop {

std::string_view emotion_name(Emotion e) noexcept {
    switch (e) {
        case Emotion::bored: return "bored";
        case Emotion::satisfied: return "satisfied";
        case Emotion::curious: return "curious";
        case Emotion::confused: return "confused";
    }
    return "?";
}

std::optional<Emotion> emotion_from_name(std::string_view name) noexcept {
    for (Emotion e : kEmotions) {
        if (emotion_name(e) == name) return e;
    }
    return std::nullopt;
}

void check_va_bounds(const VAPoint& p) {
    auto ok = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
    if (!ok(p.valence)) throw Error(Errc::precondition, "valence", "must be finite and within [-1, 1]");
    if (!ok(p.arousal)) throw Error(Errc::precondition, "arousal", "must be finite and within [-1, 1]");
}

EmotionState classify_emotion(const VAPoint& p, const FuzzyConfig& config) {
    check_va_bounds(p);
    if (!(config.sigma > 0.0)) throw Error(Errc::invalid_argument, "sigma", "fuzzy sigma must be positive");

    const double inv = 1.0 / (2.0 * config.sigma * config.sigma);
    std::array<double, kEmotionCount> raw{};
    double total = 0.0;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const double dv = p.valence - config.centers[i].valence;
        const double da = p.arousal - config.centers[i].arousal;
        raw[i] = std::exp(-(dv * dv + da * da) * inv);
        total += raw[i];
    }

    EmotionState out;
    std::size_t best = 0;
    for (std::size_t i = 1; i < kEmotionCount; ++i) {
        if (raw[i] > raw[best]) best = i;
    }
    for (std::size_t i = 0; i < kEmotionCount; ++i) out.memberships[i] = raw[i] / total;
    out.label = kEmotions[best];
    out.confidence = out.memberships[best];
    return out;
}

nlohmann::json FuzzyConfig::to_json() const {
    nlohmann::json c = nlohmann::json::object();
    for (Emotion e : kEmotions) {
        c[std::string(emotion_name(e))] = {{"valence", center(e).valence}, {"arousal", center(e).arousal}};
    }
    return {{"centers", std::move(c)}, {"sigma", sigma}};
}

FuzzyConfig FuzzyConfig::from_json(const nlohmann::json& j) {
    FuzzyConfig cfg;
    try {
        if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
        if (j.contains("centers")) {
            for (Emotion e : kEmotions) {
                const auto& c = j.at("centers").at(std::string(emotion_name(e)));
                cfg.centers[index_of(e)] = {c.at("valence").get<double>(), c.at("arousal").get<double>()};
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::schema, "fuzzy", ex.what());
    }
    if (!(cfg.sigma > 0.0)) throw Error(Errc::schema, "sigma", "must be positive");
    return cfg;
}

nlohmann::json to_json(const VAPoint& p) { return {{"valence", p.valence}, {"arousal", p.arousal}}; }

nlohmann::json to_json(const EmotionState& s) {
    nlohmann::json m = nlohmann::json::object();
    for (Emotion e : kEmotions) m[std::string(emotion_name(e))] = s.membership(e);
    return {{"memberships", std::move(m)}, {"label", emotion_name(s.label)}, {"confidence", s.confidence}};
}

}  // namespace affectloop

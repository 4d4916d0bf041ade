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

#include "affectloop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include "affectloop/calibration.hpp"
#include "affectloop/config.hpp"
#include "affectloop/error.hpp"

namespace affectloop {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gauss(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

template <std::size_t N>
std::size_t draw_index(std::mt19937_64& rng, const std::array<double, N>& p) {
    const double u = uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    for (std::size_t i = N; i-- > 0;)
        if (p[i] > 0.0) return i;
    return N - 1;
}

VAPoint jittered(const FuzzyConfig& fuzzy, Emotion e, double jitter, std::mt19937_64& rng) {
    const auto& c = fuzzy.center(e);
    return {std::clamp(c.valence + uniform(rng, -jitter, jitter), -1.0, 1.0),
            std::clamp(c.arousal + uniform(rng, -jitter, jitter), -1.0, 1.0)};
}

std::string padded(const char* prefix, std::size_t i, std::size_t width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, static_cast<int>(width), i);
    return buf;
}

std::size_t digits(std::size_t n) {
    std::size_t d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

Interval interval_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(Errc::schema, "preset", "expected a [lo, hi] pair");
    Interval r{j[0].get<double>(), j[1].get<double>()};
    if (!(r.lo <= r.hi)) throw Error(Errc::schema, "preset", "interval lo exceeds hi");
    return r;
}

nlohmann::json interval_json(const Interval& r) { return nlohmann::json::array({r.lo, r.hi}); }

nlohmann::json emotion_array(const std::array<double, kEmotionCount>& a) {
    nlohmann::json j = nlohmann::json::object();
    for (Emotion e : kEmotions) j[std::string(emotion_name(e))] = a[index_of(e)];
    return j;
}

std::array<double, kEmotionCount> emotion_array_from(const nlohmann::json& j) {
    std::array<double, kEmotionCount> a{};
    for (Emotion e : kEmotions) a[index_of(e)] = j.at(std::string(emotion_name(e))).get<double>();
    return a;
}

const FuzzyConfig kCenters{};

}  // namespace

SignalModel SignalModel::defaults() {
    SignalModel m;
    auto set = [&](Feature f, Interval base, double v, double a, double off, double noise) {
        m.features[index_of(f)] = {base, v, a, off, noise};
    };
    set(Feature::scr, {0.05, 0.20}, 0.0, 0.10, 0.10, 0.01);
    set(Feature::scl, {3.0, 8.0}, 0.20, 0.80, 0.0, 0.08);
    set(Feature::hr, {60.0, 90.0}, -2.0, 6.0, 0.0, 1.0);
    set(Feature::hrv, {35.0, 70.0}, 5.0, -6.0, 0.0, 2.0);
    set(Feature::str, {0.02, 0.06}, 0.02, 0.0, 0.02, 0.003);
    set(Feature::stl, {31.0, 35.0}, 0.40, 0.20, 0.0, 0.04);
    return m;
}

nlohmann::json SignalModel::to_json() const {
    nlohmann::json f = nlohmann::json::object();
    for (Feature feat : kFeatures) {
        const auto& s = features[index_of(feat)];
        f[std::string(feature_name(feat))] = {{"baseline", interval_json(s.baseline)},
                                              {"valence", s.valence},
                                              {"arousal", s.arousal},
                                              {"offset", s.offset},
                                              {"noise", s.noise}};
    }
    return {{"features", std::move(f)},
            {"gain", interval_json(gain)},
            {"hr_sample_noise", hr_sample_noise},
            {"rating_noise", rating_noise}};
}

SignalModel SignalModel::from_json(const nlohmann::json& j) {
    try {
        SignalModel m = defaults();
        if (j.contains("features")) {
            for (const auto& [name, s] : j.at("features").items()) {
                const auto f = feature_from_name(name);
                if (!f) throw Error(Errc::schema, "signal.features", "unknown feature '" + name + "'");
                auto& out = m.features[index_of(*f)];
                if (s.contains("baseline")) out.baseline = interval_from(s["baseline"]);
                out.valence = s.value("valence", out.valence);
                out.arousal = s.value("arousal", out.arousal);
                out.offset = s.value("offset", out.offset);
                out.noise = s.value("noise", out.noise);
                if (out.noise < 0.0) throw Error(Errc::schema, name, "noise must be non-negative");
            }
        }
        if (j.contains("gain")) m.gain = interval_from(j["gain"]);
        m.hr_sample_noise = j.value("hr_sample_noise", m.hr_sample_noise);
        m.rating_noise = j.value("rating_noise", m.rating_noise);
        if (m.gain.lo < 0.0 || m.hr_sample_noise < 0.0 || m.rating_noise < 0.0)
            throw Error(Errc::schema, "signal", "gains and noise scales must be non-negative");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "signal", e.what());
    }
}

LatentDynamics LatentDynamics::identity() {
    LatentDynamics d;
    for (auto& m : d.transitions)
        for (std::size_t i = 0; i < kEmotionCount; ++i) m[i][i] = 1.0;
    return d;
}

void LatentDynamics::validate() const {
    auto check_row = [](const std::array<double, kEmotionCount>& row, const std::string& where) {
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::schema, where, "negative or non-finite probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::schema, where, "row sums to " + std::to_string(sum));
    };
    for (Action a : kActions)
        for (Emotion e : kEmotions)
            check_row(transitions[index_of(a)][index_of(e)],
                      "dynamics." + std::string(action_name(a)) + "." + std::string(emotion_name(e)));
    check_row(initial, "dynamics.initial");
    if (!(period_s > 0.0)) throw Error(Errc::schema, "dynamics.period_s", "must be positive");
    if (!(va_jitter >= 0.0 && va_jitter <= 0.5)) throw Error(Errc::schema, "dynamics.va_jitter", "must lie in [0, 0.5]");
}

nlohmann::json LatentDynamics::to_json() const {
    nlohmann::json t = nlohmann::json::object();
    for (Action a : kActions) {
        nlohmann::json rows = nlohmann::json::object();
        for (Emotion e : kEmotions) rows[std::string(emotion_name(e))] = emotion_array(transitions[index_of(a)][index_of(e)]);
        t[std::string(action_name(a))] = std::move(rows);
    }
    return {{"period_s", period_s}, {"va_jitter", va_jitter}, {"initial", emotion_array(initial)}, {"transitions", t}};
}

LatentDynamics LatentDynamics::from_json(const nlohmann::json& j) {
    try {
        LatentDynamics d;
        d.period_s = j.value("period_s", d.period_s);
        d.va_jitter = j.value("va_jitter", d.va_jitter);
        if (j.contains("initial")) d.initial = emotion_array_from(j["initial"]);
        const auto& t = j.at("transitions");
        for (Action a : kActions) {
            const auto name = std::string(action_name(a));
            if (!t.contains(name)) throw Error(Errc::schema, "dynamics.transitions", "missing action '" + name + "'");
            for (Emotion e : kEmotions)
                d.transitions[index_of(a)][index_of(e)] = emotion_array_from(t[name].at(std::string(emotion_name(e))));
        }
        for (const auto& [name, _] : t.items())
            if (!action_from_name(name)) throw Error(Errc::schema, "dynamics.transitions", "unknown action '" + name + "'");
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "dynamics", e.what());
    }
}

nlohmann::json Preset::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : protocol.points) pts.push_back(nlohmann::json::array({p.valence, p.arousal}));
    return {{"name", name},
            {"signal", signal.to_json()},
            {"dynamics", dynamics.to_json()},
            {"calibration_protocol", {{"points", std::move(pts)}, {"hold_s", protocol.hold_s}}},
            {"action_hold_s", action_hold_s}};
}

Preset Preset::from_json(const nlohmann::json& j) {
    try {
        Preset p;
        p.name = j.at("name").get<std::string>();
        p.signal = SignalModel::from_json(j.value("signal", nlohmann::json::object()));
        p.dynamics = LatentDynamics::from_json(j.at("dynamics"));
        const auto& proto = j.at("calibration_protocol");
        for (const auto& pt : proto.at("points")) {
            VAPoint v{pt.at(0).get<double>(), pt.at(1).get<double>()};
            check_va_bounds(v);
            p.protocol.points.push_back(v);
        }
        p.protocol.hold_s = proto.value("hold_s", p.protocol.hold_s);
        if (p.protocol.points.empty() || !(p.protocol.hold_s >= 1.0))
            throw Error(Errc::schema, "calibration_protocol", "needs points and a hold of at least 1 s");
        p.action_hold_s = j.value("action_hold_s", p.action_hold_s);
        if (!(p.action_hold_s > 0.0)) throw Error(Errc::schema, "action_hold_s", "must be positive");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "preset", e.what());
    }
}

Preset Preset::load(const std::string& name_or_path) {
    std::filesystem::path path(name_or_path);
    if (!std::filesystem::exists(path)) {
        const auto shipped = data_dir() / "presets" / (name_or_path + ".json");
        if (!std::filesystem::exists(shipped))
            throw Error(Errc::not_found, name_or_path, "no preset file or shipped preset with this name");
        path = shipped;
    }
    const auto j = read_json_file(path);
    try {
        return from_json(j);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.subject(), e.detail());
    }
}

UserProfile draw_profile(std::string user_id, const SignalModel& model, std::mt19937_64& rng, bool identity_gains) {
    UserProfile u;
    u.user_id = std::move(user_id);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto& b = model.features[f].baseline;
        u.baseline[f] = uniform(rng, b.lo, b.hi);
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        u.gain[f] = identity_gains ? 1.0 : uniform(rng, model.gain.lo, model.gain.hi);
    return u;
}

std::array<double, kFeatureCount> expected_features(const UserProfile& user, const SignalModel& model, const VAPoint& va,
                                                    double gain_scale) {
    std::array<double, kFeatureCount> out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto& s = model.features[f];
        out[f] = user.baseline[f] + gain_scale * user.gain[f] * (s.valence * va.valence + s.arousal * va.arousal + s.offset);
    }
    return out;
}

GeneratedDataset generate_dataset_for(const std::vector<UserProfile>& users, const DatasetConfig& config,
                                      const SignalModel& model) {
    if (config.noise_scale == 0.0 && config.gain_scale == 0.0)
        throw Error(Errc::invalid_argument, "dataset", "zero noise and zero gain leave nothing to learn");
    if (config.noise_scale < 0.0 || config.gain_scale < 0.0)
        throw Error(Errc::invalid_argument, "dataset", "noise and gain scales must be non-negative");
    if (!(config.va_extent > 0.0 && config.va_extent <= 1.0))
        throw Error(Errc::invalid_argument, "va_extent", "must lie in (0, 1]");
    GeneratedDataset out;
    out.users = users;
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t width = std::max<std::size_t>(4, digits(config.rows_per_user));
    for (const auto& u : users) {
        for (std::size_t r = 0; r < config.rows_per_user; ++r) {
            VAPoint va = config.fixed_va ? *config.fixed_va
                                         : VAPoint{uniform(rng, -config.va_extent, config.va_extent),
                                                   uniform(rng, -config.va_extent, config.va_extent)};
            DatasetRow row;
            row.user_id = u.user_id;
            row.stimulus_id = padded("stim-", r + 1, width);
            row.features = expected_features(u, model, va, config.gain_scale);
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                row.features[f] += config.noise_scale * model.features[f].noise * gauss(rng);
            const double rn = config.noise_scale * model.rating_noise;
            row.valence = std::clamp(5.0 + 4.0 * va.valence + rn * gauss(rng), 1.0, 9.0);
            row.arousal = std::clamp(5.0 + 4.0 * va.arousal + rn * gauss(rng), 1.0, 9.0);
            out.rows.push_back(row);
            out.truth.push_back({u.user_id, row.stimulus_id, va, classify_emotion(va).label});
        }
    }
    return out;
}

GeneratedDataset generate_dataset(const DatasetConfig& config, const SignalModel& model) {
    if (config.users < 2) throw Error(Errc::invalid_argument, "users", "at least two users are required");
    if (config.rows_per_user == 0) throw Error(Errc::invalid_argument, "rows", "must be positive");
    std::mt19937_64 rng(config.seed);
    std::vector<UserProfile> users;
    const std::size_t width = std::max<std::size_t>(2, digits(config.users));
    for (std::size_t i = 0; i < config.users; ++i)
        users.push_back(draw_profile(padded("u", i + 1, width), model, rng, config.identity_gains));
    return generate_dataset_for(users, config, model);
}

SyntheticStudent make_student(std::string student_id, const UserProfile& profile, Emotion initial, double va_jitter,
                              std::uint64_t seed) {
    SyntheticStudent st;
    st.student_id = std::move(student_id);
    st.profile = profile;
    st.latent = initial;
    st.rng.seed(seed);
    st.va = jittered(kCenters, initial, va_jitter, st.rng);
    return st;
}

StepResult step_student(SyntheticStudent& st, Action applied, double dt_s, const LatentDynamics& dynamics,
                        const SignalModel& model) {
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw Error(Errc::invalid_argument, "dt_s", "must be positive");
    StepResult out;
    st.pending_s += dt_s;
    const auto& table = dynamics.transitions[index_of(applied)];
    while (st.pending_s >= 1.0 - 1e-9) {
        st.pending_s -= 1.0;
        if (!st.forced_va) {
            st.latent_elapsed_s += 1.0;
            while (st.latent_elapsed_s >= dynamics.period_s - 1e-9) {
                st.latent_elapsed_s -= dynamics.period_s;
                const auto next = kEmotions[draw_index(st.rng, table[index_of(st.latent)])];
                ++out.transitions;
                if (next != st.latent) {
                    st.latent = next;
                    st.va = jittered(kCenters, next, dynamics.va_jitter, st.rng);
                }
            }
        }
        st.clock_ms += 1000;
        const auto e = expected_features(st.profile, model, st.current_va());
        const double eda = std::clamp(e[index_of(Feature::scl)] + e[index_of(Feature::scr)] * gauss(st.rng), 0.01, 99.0);
        const double hr_mean = e[index_of(Feature::hr)];
        const double hr = std::clamp(hr_mean + model.hr_sample_noise * gauss(st.rng), 25.0, 240.0);
        const double rr =
            std::clamp(60000.0 / hr_mean + e[index_of(Feature::hrv)] / std::sqrt(2.0) * gauss(st.rng), 250.0, 2900.0);
        const double temp = std::clamp(e[index_of(Feature::stl)] + e[index_of(Feature::str)] * gauss(st.rng), 20.5, 44.5);
        out.samples.push_back({st.student_id, st.clock_ms, Channel::hr, hr});
        out.samples.push_back({st.student_id, st.clock_ms, Channel::rr, rr});
        out.samples.push_back({st.student_id, st.clock_ms, Channel::eda, eda});
        out.samples.push_back({st.student_id, st.clock_ms, Channel::temp, temp});
    }
    return out;
}

StepResult step_student(SyntheticStudent& st, std::string_view applied, double dt_s, const LatentDynamics& dynamics,
                        const SignalModel& model) {
    const auto a = action_from_name(applied);
    if (!a) throw Error(Errc::invalid_argument, std::string(applied), "unknown action");
    return step_student(st, *a, dt_s, dynamics, model);
}

void ScenarioConfig::validate() const {
    if (students == 0) throw Error(Errc::invalid_argument, "students", "must be positive");
    if (!(minutes > 0.0) || !std::isfinite(minutes)) throw Error(Errc::invalid_argument, "minutes", "must be positive");
}

nlohmann::json ScenarioConfig::to_json() const {
    return {{"students", students},
            {"minutes", minutes},
            {"controller", controller ? "on" : "off"},
            {"preset", preset},
            {"seed", seed}};
}

nlohmann::json ClosedLoopResult::report() const {
    auto m = metrics.to_json();
    m.erase("latency_ms");
    return {{"config", config.to_json()},
            {"live_since_ms", live_since_ms},
            {"ended_ms", ended_ms},
            {"metrics", std::move(m)},
            {"dwell_fraction",
             {{"recognized_mean_student", emotion_array(metrics.mean_student_dwell_fraction())},
              {"recognized_collective", emotion_array(metrics.collective_dwell_fraction())},
              {"latent", emotion_array(latent_dwell_fraction)}}},
            {"recognition_accuracy", recognition_accuracy},
            {"suggestions", metrics.suggestion_count},
            {"actions_applied", actions_applied}};
}

namespace {

std::vector<SensorSample> step_all(std::vector<SyntheticStudent>& students, Action applied, const Preset& preset) {
    std::vector<SensorSample> batch;
    batch.reserve(students.size() * kChannelCount);
    for (auto& st : students) {
        auto r = step_student(st, applied, 1.0, preset.dynamics, preset.signal);
        batch.insert(batch.end(), r.samples.begin(), r.samples.end());
    }
    return batch;
}

}  // namespace

ClosedLoopResult run_closed_loop(const ScenarioConfig& config, const Preset& preset,
                                 std::shared_ptr<const VaRegressor> model, std::shared_ptr<const Policy> policy,
                                 const EngineConfig& engine) {
    config.validate();
    preset.dynamics.validate();
    std::mt19937_64 rng(config.seed);
    std::vector<SyntheticStudent> students;
    std::vector<RosterEntry> roster;
    const std::size_t width = std::max<std::size_t>(2, digits(config.students));
    for (std::size_t i = 0; i < config.students; ++i) {
        auto id = padded("s", i + 1, width);
        const auto profile = draw_profile(id, preset.signal, rng);
        const auto initial = kEmotions[draw_index(rng, preset.dynamics.initial)];
        const auto seed = rng();
        students.push_back(make_student(id, profile, initial, preset.dynamics.va_jitter, seed));
        roster.push_back({id, {}});
    }

    Session session("sim-" + std::to_string(config.seed), roster, std::move(model), std::move(policy), engine, 0);
    std::vector<Event> fresh;
    session.set_sink([&](const Event& e) { fresh.push_back(e); });

    ClosedLoopResult result;
    result.config = config;

    for (const auto& point : preset.protocol.points) {
        for (auto& st : students) st.forced_va = point;
        const auto seconds = static_cast<std::size_t>(std::llround(preset.protocol.hold_s));
        for (std::size_t t = 0; t < seconds; ++t) session.ingest_batch(step_all(students, Action::no_change, preset));
    }
    for (auto& st : students) st.forced_va.reset();
    session.go_live();
    result.live_since_ms = session.data_clock_ms();
    fresh.clear();

    std::array<double, kEmotionCount> latent_dwell{};
    std::size_t label_hits = 0, label_total = 0;
    Action current = Action::no_change;
    double hold_left = 0.0;
    const auto live_seconds = static_cast<std::size_t>(std::llround(config.minutes * 60.0));
    for (std::size_t t = 0; t < live_seconds; ++t) {
        const Action applied = (config.controller && hold_left > 0.0) ? current : Action::no_change;
        auto batch = step_all(students, applied, preset);
        hold_left -= 1.0;
        for (const auto& st : students) latent_dwell[index_of(st.latent)] += 1.0;
        session.ingest_batch(batch);

        for (const auto& e : fresh) {
            if (e.type == event_type::tick && !e.data.at("state").is_null()) {
                for (const auto& st : students) {
                    const auto& per = e.data["state"]["students"];
                    if (!per.contains(st.student_id)) continue;
                    ++label_total;
                    if (per[st.student_id]["label"].get<std::string>() == emotion_name(st.latent)) ++label_hits;
                }
            } else if (e.type == event_type::suggestion && config.controller) {
                current = *action_from_name(e.data.at("action").get<std::string>());
                hold_left = preset.action_hold_s;
            }
        }
        const bool act = config.controller && std::any_of(fresh.begin(), fresh.end(), [](const Event& e) {
                             return e.type == event_type::suggestion;
                         });
        fresh.clear();
        if (act) {
            session.record_action(current, ActionSource::applied, session.data_clock_ms());
            ++result.actions_applied;
        }
    }
    session.end();
    result.ended_ms = session.data_clock_ms();

    double total = 0.0;
    for (double d : latent_dwell) total += d;
    for (std::size_t i = 0; i < kEmotionCount; ++i) result.latent_dwell_fraction[i] = total > 0 ? latent_dwell[i] / total : 0.0;
    result.recognition_accuracy = label_total ? static_cast<double>(label_hits) / static_cast<double>(label_total) : 0.0;
    result.metrics = session.metrics();
    result.events = session.events();
    return result;
}

std::vector<TrainingRow> stream_training_rows(const Preset& preset, const StreamTrainingConfig& config,
                                              std::size_t window) {
    if (config.users == 0 || !(config.minutes_per_user > 0.0) || !(config.sample_every_s >= 1.0))
        throw Error(Errc::invalid_argument, "stream training", "users, minutes and sampling interval must be positive");
    std::mt19937_64 rng(config.seed ^ 0x5bd1e9955bd1e995ULL);
    std::vector<TrainingRow> rows;
    CalibrationConfig cc;
    cc.freeze_after = 0;
    const auto every = static_cast<std::size_t>(std::llround(config.sample_every_s));
    for (std::size_t u = 0; u < config.users; ++u) {
        const std::string id = padded("t", u + 1, 2);
        const auto profile = draw_profile(id, preset.signal, rng);
        auto st = make_student(id, profile, Emotion::bored, 0.0, rng());
        StudentStream stream(id, std::max(kDefaultRingCapacity, 2 * window));
        CalibrationState cal(cc);

        for (const auto& point : preset.protocol.points) {
            st.forced_va = point;
            const auto seconds = static_cast<std::size_t>(std::llround(preset.protocol.hold_s));
            for (std::size_t t = 0; t < seconds; ++t) {
                for (const auto& s : step_student(st, Action::no_change, 1.0, preset.dynamics, preset.signal).samples)
                    stream.append(s);
                try {
                    cal.update_extrema(id, extract_features(stream.snapshot(), window));
                } catch (const Error& e) {
                    if (e.code() != Errc::warm_up) throw;
                }
            }
        }
        cal.freeze(id);

        std::deque<VAPoint> recent;
        const auto total = static_cast<std::size_t>(std::llround(config.minutes_per_user * 60.0));
        double hold_left = 0.0;
        for (std::size_t t = 1; t <= total; ++t) {
            if (hold_left <= 0.0) {
                st.forced_va = VAPoint{uniform(rng, -0.95, 0.95), uniform(rng, -0.95, 0.95)};
                hold_left = uniform(rng, config.hold_s.lo, config.hold_s.hi);
            }
            hold_left -= 1.0;
            for (const auto& s : step_student(st, Action::no_change, 1.0, preset.dynamics, preset.signal).samples)
                stream.append(s);
            recent.push_back(*st.forced_va);
            if (recent.size() > window) recent.pop_front();
            if (t < window || t % every != 0) continue;
            const auto x = cal.normalize(id, extract_features(stream.snapshot(), window)).values;
            VAPoint mean;
            for (const auto& p : recent) {
                mean.valence += p.valence;
                mean.arousal += p.arousal;
            }
            const double n = static_cast<double>(recent.size());
            TrainingRow row;
            row.x = x;
            row.valence = 5.0 + 4.0 * mean.valence / n;
            row.arousal = 5.0 + 4.0 * mean.arousal / n;
            rows.push_back(row);
        }
    }
    return rows;
}

VaRegressor train_stream_model(const Preset& preset, const StreamTrainingConfig& config) {
    const auto rows = stream_training_rows(preset, config);
    TrainOptions opts;
    opts.seed = config.seed;
    opts.grid_search = config.grid_search;
    return train_regressor(rows, opts).model;
}

}  // namespace affectloop

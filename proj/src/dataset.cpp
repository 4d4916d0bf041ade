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

#include "affectloop/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "affectloop/error.hpp"

namespace affectloop {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view text, const std::string& where) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw Error(Errc::parse, where, "not a finite number: '" + std::string(text) + "'");
    }
    return v;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename Row>
std::vector<Row> read_csv(const std::filesystem::path& path, std::string_view header, std::size_t columns,
                          Row (*make)(const std::vector<std::string_view>&, const std::string&)) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, path.string(), "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::schema, path.string(), "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw Error(Errc::schema, path.string() + ":1", "expected header '" + std::string(header) + "'");
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() != columns) {
            throw Error(Errc::schema, where,
                        "expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
        }
        rows.push_back(make(cells, where));
    }
    return rows;
}

DatasetRow make_dataset_row(const std::vector<std::string_view>& c, const std::string& where) {
    DatasetRow r;
    r.user_id = std::string(c[0]);
    r.stimulus_id = std::string(c[1]);
    if (r.user_id.empty()) throw Error(Errc::schema, where, "empty user_id");
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        r.features[i] = parse_number(c[2 + i], where + " " + std::string(feature_name(kFeatures[i])));
    }
    r.valence = parse_number(c[8], where + " valence");
    r.arousal = parse_number(c[9], where + " arousal");
    return r;
}

TruthRow make_truth_row(const std::vector<std::string_view>& c, const std::string& where) {
    TruthRow r;
    r.user_id = std::string(c[0]);
    r.stimulus_id = std::string(c[1]);
    r.va = {parse_number(c[2], where + " valence"), parse_number(c[3], where + " arousal")};
    const auto e = emotion_from_name(c[4]);
    if (!e) throw Error(Errc::schema, where + " emotion", "unknown emotion '" + std::string(c[4]) + "'");
    r.emotion = *e;
    return r;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, path.string(), "cannot write file");
    return out;
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, std::span<const DatasetRow> rows) {
    auto out = open_out(path);
    out << kDatasetHeader << '\n';
    for (const auto& r : rows) {
        out << r.user_id << ',' << r.stimulus_id;
        for (double f : r.features) out << ',' << fmt(f);
        out << ',' << fmt(r.valence) << ',' << fmt(r.arousal) << '\n';
    }
}

std::vector<DatasetRow> read_dataset_csv(const std::filesystem::path& path) {
    return read_csv<DatasetRow>(path, kDatasetHeader, 10, &make_dataset_row);
}

void write_truth_csv(const std::filesystem::path& path, std::span<const TruthRow> rows) {
    auto out = open_out(path);
    out << kTruthHeader << '\n';
    for (const auto& r : rows) {
        out << r.user_id << ',' << r.stimulus_id << ',' << fmt(r.va.valence) << ',' << fmt(r.va.arousal) << ','
            << emotion_name(r.emotion) << '\n';
    }
}

std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path) {
    return read_csv<TruthRow>(path, kTruthHeader, 5, &make_truth_row);
}

std::vector<TrainingRow> calibrate_rows(std::span<const DatasetRow> rows, CalibrationMode mode, FeatureSpace space) {
    CalibrationConfig cfg;
    cfg.min_samples = 1;
    cfg.freeze_after = 0;
    cfg.space = space;
    CalibrationState state(cfg);
    static const std::string kPooled = "*";
    auto key = [&](const DatasetRow& r) -> const std::string& {
        return mode == CalibrationMode::personalized ? r.user_id : kPooled;
    };
    for (const auto& r : rows) state.update_extrema(key(r), r.features);
    std::vector<TrainingRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        TrainingRow t;
        t.x = state.normalize(key(r), r.features).values;
        t.valence = r.valence;
        t.arousal = r.arousal;
        out.push_back(t);
    }
    return out;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return n;
}

double ConfusionMatrix::accuracy() const {
    const std::size_t n = total();
    if (n == 0) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < kEmotionCount; ++i) hit += counts[i][i];
    return static_cast<double>(hit) / static_cast<double>(n);
}

std::array<std::array<double, kEmotionCount>, kEmotionCount> ConfusionMatrix::proportions() const {
    std::array<std::array<double, kEmotionCount>, kEmotionCount> p{};
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const auto n = std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0});
        if (n == 0) continue;
        for (std::size_t j = 0; j < kEmotionCount; ++j) p[i][j] = static_cast<double>(counts[i][j]) / static_cast<double>(n);
    }
    return p;
}

nlohmann::json ConfusionMatrix::to_json() const {
    nlohmann::json rows = nlohmann::json::object();
    const auto p = proportions();
    for (Emotion t : kEmotions) {
        nlohmann::json row = nlohmann::json::object();
        for (Emotion q : kEmotions) row[std::string(emotion_name(q))] = p[index_of(t)][index_of(q)];
        rows[std::string(emotion_name(t))] = std::move(row);
    }
    return {{"accuracy", accuracy()}, {"n", total()}, {"proportions", std::move(rows)}};
}

void ConfusionMatrix::write_csv(const std::filesystem::path& path) const {
    auto out = open_out(path);
    out << "true\\predicted";
    for (Emotion e : kEmotions) out << ',' << emotion_name(e);
    out << '\n';
    const auto p = proportions();
    for (Emotion t : kEmotions) {
        out << emotion_name(t);
        for (Emotion q : kEmotions) out << ',' << fmt(p[index_of(t)][index_of(q)]);
        out << '\n';
    }
}

void check_aligned(std::span<const DatasetRow> rows, std::span<const TruthRow> truth) {
    if (rows.size() != truth.size()) {
        throw Error(Errc::schema, "truth", "row count " + std::to_string(truth.size()) + " does not match dataset row count " +
                                              std::to_string(rows.size()));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].user_id != truth[i].user_id || rows[i].stimulus_id != truth[i].stimulus_id) {
            throw Error(Errc::schema, "truth row " + std::to_string(i + 1),
                        "keys differ from the dataset (" + truth[i].user_id + "/" + truth[i].stimulus_id + ")");
        }
    }
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

ConfusionMatrix evaluate_regressor(const VaRegressor& model, std::span<const TrainingRow> calibrated,
                                   std::span<const TruthRow> truth, std::span<const std::size_t> which,
                                   const FuzzyConfig& fuzzy) {
    ConfusionMatrix cm;
    for (std::size_t i : which) {
        const auto va = predict_va(model, calibrated[i].x);
        cm.add(truth[i].emotion, classify_emotion(va, fuzzy).label);
    }
    return cm;
}

ConfusionMatrix evaluate_knn(std::span<const TrainingRow> calibrated, std::span<const TruthRow> truth,
                             std::span<const std::size_t> reference, std::span<const std::size_t> which, std::size_t k,
                             const FuzzyConfig& fuzzy) {
    if (k == 0 || reference.size() < k) throw Error(Errc::invalid_argument, "k", "need at least k reference rows");
    ConfusionMatrix cm;
    std::vector<std::pair<double, std::size_t>> dist(reference.size());
    for (std::size_t i : which) {
        for (std::size_t r = 0; r < reference.size(); ++r) {
            double d = 0.0;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const double diff = calibrated[i].x[f] - calibrated[reference[r]].x[f];
                d += diff * diff;
            }
            dist[r] = {d, reference[r]};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        VAPoint mean;
        for (std::size_t n = 0; n < k; ++n) {
            mean.valence += rescale_label(calibrated[dist[n].second].valence);
            mean.arousal += rescale_label(calibrated[dist[n].second].arousal);
        }
        mean.valence = std::clamp(mean.valence / static_cast<double>(k), -1.0, 1.0);
        mean.arousal = std::clamp(mean.arousal / static_cast<double>(k), -1.0, 1.0);
        cm.add(truth[i].emotion, classify_emotion(mean, fuzzy).label);
    }
    return cm;
}

}  // namespace affectloop

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

#include "affectloop/svr.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "affectloop/error.hpp"
#include "affectloop/simd/kernels.hpp"

namespace affectloop {

namespace {

constexpr double kTau = 1e-12;

std::vector<double> to_columns(std::span<const double> rows, std::size_t n, std::size_t dims) {
    std::vector<double> cols(n * dims);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dims; ++j) cols[j * n + i] = rows[i * dims + j];
    return cols;
}

// out[k] = exp(-gamma * |col_k - x|^2) over the n points stored in `cols`.
void kernel_row(const std::vector<double>& cols, std::size_t n, std::size_t dims, const double* x, double gamma,
                double* out) {
    const auto& k = simd::active();
    std::fill(out, out + n, 0.0);
    for (std::size_t j = 0; j < dims; ++j) k.accumulate_sq_diff(cols.data() + j * n, n, x[j], out);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-gamma * out[i]);
}

void check_params(const SvrParams& p) {
    if (!(p.kernel_scale > 0.0) || !std::isfinite(p.kernel_scale))
        throw Error(Errc::invalid_argument, "kernel_scale", "must be positive");
    if (!(p.c > 0.0) || !std::isfinite(p.c)) throw Error(Errc::invalid_argument, "c", "must be positive");
    if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon))
        throw Error(Errc::invalid_argument, "epsilon", "must be non-negative");
    if (!(p.tolerance > 0.0)) throw Error(Errc::invalid_argument, "tolerance", "must be positive");
}

}  // namespace

SvrModel::SvrModel(SvrParams params, std::size_t dims, std::vector<double> sv_rows, std::vector<double> coefficients,
                   double bias)
    : params_(params), dims_(dims), rows_(std::move(sv_rows)), coef_(std::move(coefficients)), bias_(bias) {
    if (dims_ == 0 || rows_.size() != coef_.size() * dims_) {
        throw Error(Errc::invalid_argument, "support_vectors", "shape does not match coefficient count");
    }
    cols_ = to_columns(rows_, coef_.size(), dims_);
}

double SvrModel::predict(std::span<const double> x) const {
    if (x.size() != dims_) throw Error(Errc::precondition, "x", "dimension mismatch");
    const std::size_t n = coef_.size();
    if (n == 0) return bias_;
    const double gamma = 1.0 / (2.0 * params_.kernel_scale * params_.kernel_scale);
    std::vector<double> k(n);
    kernel_row(cols_, n, dims_, x.data(), gamma, k.data());
    return simd::active().dot(coef_.data(), k.data(), n) + bias_;
}

nlohmann::json SvrModel::to_json() const {
    nlohmann::json svs = nlohmann::json::array();
    for (std::size_t i = 0; i < coef_.size(); ++i) {
        svs.push_back(std::vector<double>(rows_.begin() + static_cast<std::ptrdiff_t>(i * dims_),
                                          rows_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dims_)));
    }
    return {{"kernel_scale", params_.kernel_scale},
            {"c", params_.c},
            {"epsilon", params_.epsilon},
            {"bias", bias_},
            {"coefficients", coef_},
            {"support_vectors", std::move(svs)}};
}

SvrModel SvrModel::from_json(const nlohmann::json& j, std::size_t dims) {
    try {
        SvrParams p;
        p.kernel_scale = j.at("kernel_scale").get<double>();
        p.c = j.at("c").get<double>();
        p.epsilon = j.at("epsilon").get<double>();
        check_params(p);
        auto coef = j.at("coefficients").get<std::vector<double>>();
        std::vector<double> rows;
        const auto& svs = j.at("support_vectors");
        if (svs.size() != coef.size()) throw Error(Errc::schema, "support_vectors", "count differs from coefficients");
        rows.reserve(coef.size() * dims);
        for (const auto& sv : svs) {
            auto v = sv.get<std::vector<double>>();
            if (v.size() != dims) throw Error(Errc::schema, "support_vectors", "wrong dimension");
            rows.insert(rows.end(), v.begin(), v.end());
        }
        return SvrModel(p, dims, std::move(rows), std::move(coef), j.at("bias").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "svr", e.what());
    }
}

SvrFit train_svr(std::span<const double> x, std::size_t dims, std::span<const double> targets,
                 const SvrParams& params) {
    check_params(params);
    const std::size_t l = targets.size();
    if (dims == 0 || l == 0 || x.size() != l * dims) {
        throw Error(Errc::invalid_argument, "x", "expected a non-empty row-major matrix matching the targets");
    }
    for (double v : x)
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "x", "non-finite input");
    for (double v : targets)
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "targets", "non-finite target");

    const double gamma = 1.0 / (2.0 * params.kernel_scale * params.kernel_scale);
    const auto cols = to_columns(x, l, dims);
    std::vector<double> kmat(l * l);
    for (std::size_t i = 0; i < l; ++i) kernel_row(cols, l, dims, x.data() + i * dims, gamma, kmat.data() + i * l);

    // Dual over 2l variables: t < l carry alpha (y = +1), t >= l carry
    // alpha* (y = -1). Minimize 1/2 a'Qa + p'a with y'a = 0, 0 <= a <= C.
    const std::size_t n2 = 2 * l;
    const double C = params.c;
    std::vector<double> alpha(n2, 0.0);
    std::vector<double> grad(n2);
    for (std::size_t t = 0; t < l; ++t) {
        grad[t] = params.epsilon - targets[t];
        grad[t + l] = params.epsilon + targets[t];
    }
    auto sign = [l](std::size_t t) { return t < l ? 1.0 : -1.0; };
    auto K = [&](std::size_t a, std::size_t b) { return kmat[(a % l) * l + (b % l)]; };
    const auto& kern = simd::active();

    SvrFit fit;
    std::size_t iter = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (; iter < params.max_iterations; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < n2; ++t) {
            if (t < l) {
                if (alpha[t] < C && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i = static_cast<std::ptrdiff_t>(t);
                }
            } else if (alpha[t] > 0.0 && grad[t] >= gmax) {
                gmax = grad[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0) {
            gap = 0.0;
            break;
        }
        const auto ii = static_cast<std::size_t>(i);

        double gmax2 = -std::numeric_limits<double>::infinity();
        double obj_min = std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        for (std::size_t t = 0; t < n2; ++t) {
            double grad_diff;
            if (t < l) {
                if (!(alpha[t] > 0.0)) continue;
                grad_diff = gmax + grad[t];
                gmax2 = std::max(gmax2, grad[t]);
            } else {
                if (!(alpha[t] < C)) continue;
                grad_diff = gmax - grad[t];
                gmax2 = std::max(gmax2, -grad[t]);
            }
            if (grad_diff > 0.0) {
                double quad = K(ii, ii) + K(t, t) - 2.0 * K(ii, t);
                if (quad <= 0.0) quad = kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj <= obj_min) {
                    obj_min = obj;
                    j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        gap = gmax + gmax2;
        if (gap < params.tolerance || j < 0) break;
        const auto jj = static_cast<std::size_t>(j);

        const double yi = sign(ii);
        const double yj = sign(jj);
        const double qij = yi * yj * K(ii, jj);
        const double old_ai = alpha[ii];
        const double old_aj = alpha[jj];
        double& ai = alpha[ii];
        double& aj = alpha[jj];
        if (yi != yj) {
            double quad = K(ii, ii) + K(jj, jj) + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[ii] - grad[jj]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C) {
                    ai = C;
                    aj = C - diff;
                }
            } else if (aj > C) {
                aj = C;
                ai = C + diff;
            }
        } else {
            double quad = K(ii, ii) + K(jj, jj) - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[ii] - grad[jj]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) {
                    ai = C;
                    aj = sum - C;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > C) {
                if (aj > C) {
                    aj = C;
                    ai = sum - C;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }

        const double dai = ai - old_ai;
        const double daj = aj - old_aj;
        kern.dual_gradient_update(kmat.data() + (ii % l) * l, yi * dai, kmat.data() + (jj % l) * l, yj * daj,
                                  grad.data(), grad.data() + l, l);
    }

    // Offset: mean of y*G over free variables, else the midpoint of the
    // feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n2; ++t) {
        const double yg = sign(t) * grad[t];
        const bool upper = alpha[t] >= C;
        const bool lower = alpha[t] <= 0.0;
        if (upper) {
            if (sign(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower) {
            if (sign(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    fit.beta.resize(l);
    std::vector<double> sv_rows;
    std::vector<double> coef;
    for (std::size_t t = 0; t < l; ++t) {
        fit.beta[t] = alpha[t] - alpha[t + l];
        if (fit.beta[t] != 0.0) {
            coef.push_back(fit.beta[t]);
            sv_rows.insert(sv_rows.end(), x.begin() + static_cast<std::ptrdiff_t>(t * dims),
                           x.begin() + static_cast<std::ptrdiff_t>((t + 1) * dims));
        }
    }
    fit.model = SvrModel(params, dims, std::move(sv_rows), std::move(coef), -rho);
    fit.iterations = iter;
    fit.final_gap = gap;
    fit.converged = gap < params.tolerance || iter < params.max_iterations;
    return fit;
}

SplitRatios SplitRatios::parse(std::string_view text) {
    std::array<double, 3> parts{};
    std::size_t idx = 0;
    std::size_t pos = 0;
    while (idx < 3) {
        const auto colon = text.find(':', pos);
        const auto token = text.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || !(v >= 0.0)) {
            throw Error(Errc::invalid_argument, "split", "expected three non-negative numbers like 70:15:15");
        }
        parts[idx++] = v;
        if (colon == std::string_view::npos) break;
        pos = colon + 1;
    }
    const double total = parts[0] + parts[1] + parts[2];
    if (idx != 3 || !(total > 0.0) || parts[0] <= 0.0 || parts[1] <= 0.0 || parts[2] <= 0.0) {
        throw Error(Errc::invalid_argument, "split", "expected three positive parts like 70:15:15");
    }
    return {parts[0] / total, parts[1] / total, parts[2] / total};
}

nlohmann::json TrainingReport::to_json() const {
    auto target = [](const TargetReport& t) {
        return nlohmann::json{{"kernel_scale", t.chosen.kernel_scale},
                              {"c", t.chosen.c},
                              {"epsilon", t.chosen.epsilon},
                              {"train_rmse", t.train_rmse},
                              {"validation_rmse", t.validation_rmse},
                              {"test_rmse", t.test_rmse},
                              {"support_vectors", t.support_vectors}};
    };
    return {{"valence", target(valence)},
            {"arousal", target(arousal)},
            {"rows", {{"train", train_rows.size()}, {"validation", validation_rows.size()}, {"test", test_rows.size()}}}};
}

namespace {
constexpr const char* kFormat = "affectloop-va-regressor";

std::string space_tag(FeatureSpace s) { return s == FeatureSpace::unit ? "minmax-unit-v1" : "minmax-symmetric-v1"; }

FeatureSpace space_from_tag(const std::string& tag) {
    if (tag == "minmax-unit-v1") return FeatureSpace::unit;
    if (tag == "minmax-symmetric-v1") return FeatureSpace::symmetric;
    throw Error(Errc::schema, "feature_space", "unknown feature-space version '" + tag + "'");
}
}  // namespace

nlohmann::json VaRegressor::to_json() const {
    if (!trained_) throw Error(Errc::untrained, "model", "cannot serialize an untrained regressor");
    return {{"format", kFormat},
            {"version", 1},
            {"feature_space", space_tag(space_)},
            {"dims", kFeatureCount},
            {"label_scale", {{"center", 5.0}, {"half_range", 4.0}}},
            {"valence", valence_.to_json()},
            {"arousal", arousal_.to_json()}};
}

VaRegressor VaRegressor::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kFormat) throw Error(Errc::schema, "format", "not a VA regressor file");
        if (j.at("dims").get<std::size_t>() != kFeatureCount) throw Error(Errc::schema, "dims", "expected 6 features");
        const auto space = space_from_tag(j.at("feature_space").get<std::string>());
        return VaRegressor(SvrModel::from_json(j.at("valence"), kFeatureCount),
                           SvrModel::from_json(j.at("arousal"), kFeatureCount), space);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::schema, "model", e.what());
    }
}

VaRegressor VaRegressor::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, path, "cannot open model file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::parse, path, e.what());
    }
    return from_json(j);
}

void VaRegressor::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, path, "cannot write model file");
    out << to_json().dump(1) << '\n';
}

RowSplit split_rows(std::size_t n, const SplitRatios& r, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.validation));
    auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.test));
    n_val = std::max<std::size_t>(n_val, 1);
    n_test = std::max<std::size_t>(n_test, 1);
    const std::size_t n_train = n - n_val - n_test;
    RowSplit s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

RowSplit split_groups(std::span<const std::string> group_of_row, const SplitRatios& r, std::uint64_t seed) {
    std::vector<std::string> groups(group_of_row.begin(), group_of_row.end());
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    const std::size_t g = groups.size();
    if (g < 3) throw Error(Errc::insufficient_data, "groups", "a grouped split needs at least three groups");
    std::mt19937_64 rng(seed);
    std::shuffle(groups.begin(), groups.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(g) * r.validation));
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(g) * r.test));
    n_val = std::max<std::size_t>(n_val, 1);
    n_test = std::max<std::size_t>(n_test, 1);
    while (n_val + n_test >= g) {
        if (n_val >= n_test && n_val > 1) --n_val;
        else if (n_test > 1) --n_test;
        else break;
    }
    const std::size_t n_train = g - n_val - n_test;
    std::map<std::string, int> part;
    for (std::size_t i = 0; i < g; ++i) part[groups[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    RowSplit s;
    for (std::size_t i = 0; i < group_of_row.size(); ++i) {
        switch (part[group_of_row[i]]) {
            case 0: s.train.push_back(i); break;
            case 1: s.validation.push_back(i); break;
            default: s.test.push_back(i); break;
        }
    }
    return s;
}

namespace {

double rmse(const SvrModel& m, std::span<const TrainingRow> rows, const std::vector<std::size_t>& which,
            double (*target)(const TrainingRow&)) {
    if (which.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t r : which) {
        const double pred = std::clamp(m.predict(rows[r].x), -1.0, 1.0);
        const double d = pred - rescale_label(target(rows[r]));
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(which.size()));
}

double valence_of(const TrainingRow& r) { return r.valence; }
double arousal_of(const TrainingRow& r) { return r.arousal; }

std::vector<SvrParams> grid_around(const SvrParams& center, bool enabled) {
    std::vector<SvrParams> grid{center};
    if (!enabled) return grid;
    for (double s : {1.0, 0.5, 2.0}) {
        for (double c : {1.0, 1.0 / 3.0, 3.0}) {
            if (s == 1.0 && c == 1.0) continue;
            SvrParams p = center;
            p.kernel_scale *= s;
            p.c *= c;
            grid.push_back(p);
        }
    }
    return grid;
}

TargetReport fit_target(std::span<const TrainingRow> rows, const RowSplit& split, const std::vector<SvrParams>& grid,
                        double (*target)(const TrainingRow&), SvrModel& best_model) {
    std::vector<double> x;
    std::vector<double> z;
    x.reserve(split.train.size() * kFeatureCount);
    for (std::size_t r : split.train) {
        x.insert(x.end(), rows[r].x.begin(), rows[r].x.end());
        z.push_back(rescale_label(target(rows[r])));
    }
    TargetReport best;
    best.validation_rmse = std::numeric_limits<double>::infinity();
    for (const auto& p : grid) {
        auto fit = train_svr(x, kFeatureCount, z, p);
        const double v = rmse(fit.model, rows, split.validation, target);
        if (v < best.validation_rmse) {
            best.chosen = p;
            best.validation_rmse = v;
            best_model = std::move(fit.model);
        }
    }
    best.train_rmse = rmse(best_model, rows, split.train, target);
    best.test_rmse = rmse(best_model, rows, split.test, target);
    best.support_vectors = best_model.support_count();
    return best;
}

}  // namespace

TrainResult train_regressor(std::span<const TrainingRow> rows, const TrainOptions& options) {
    if (rows.size() < kMinTrainingRows) {
        throw Error(Errc::insufficient_data, "rows",
                    "too few rows: " + std::to_string(rows.size()) + " < " + std::to_string(kMinTrainingRows));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (double lab : {rows[i].valence, rows[i].arousal}) {
            if (!std::isfinite(lab)) throw Error(Errc::invalid_argument, "row " + std::to_string(i), "non-finite label");
            if (lab < 1.0 || lab > 9.0) throw Error(Errc::range, "row " + std::to_string(i), "label outside [1, 9]");
        }
        for (double v : rows[i].x)
            if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "row " + std::to_string(i), "non-finite feature");
    }

    if (!options.groups.empty() && options.groups.size() != rows.size())
        throw Error(Errc::invalid_argument, "groups", "need one group label per row");
    const auto split = options.groups.empty() ? split_rows(rows.size(), options.split, options.seed)
                                              : split_groups(options.groups, options.split, options.seed);
    const auto grid = grid_around(options.center, options.grid_search);

    TrainResult result;
    SvrModel valence, arousal;
    result.report.valence = fit_target(rows, split, grid, &valence_of, valence);
    result.report.arousal = fit_target(rows, split, grid, &arousal_of, arousal);
    result.report.train_rows = split.train;
    result.report.validation_rows = split.validation;
    result.report.test_rows = split.test;
    result.model = VaRegressor(std::move(valence), std::move(arousal), options.space);
    return result;
}

VAPoint predict_va(const VaRegressor& model, const std::array<double, kFeatureCount>& x) {
    if (!model.trained()) throw Error(Errc::untrained, "model", "regressor has not been trained");
    const double lo = model.feature_space() == FeatureSpace::unit ? 0.0 : -1.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(x[i]) || x[i] < lo || x[i] > 1.0) {
            throw Error(Errc::precondition, std::string(feature_name(kFeatures[i])),
                        "calibrated feature " + std::to_string(x[i]) + " outside the model's feature space");
        }
    }
    return {std::clamp(model.valence_model().predict(x), -1.0, 1.0),
            std::clamp(model.arousal_model().predict(x), -1.0, 1.0)};
}

}  // namespace affectloop

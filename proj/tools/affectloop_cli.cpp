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

// Command-line entry points: data generation, training, evaluation,
// simulation, replay, serving and MDP analysis.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "affectloop/config.hpp"
#include "affectloop/dataset.hpp"
#include "affectloop/error.hpp"
#include "affectloop/markov.hpp"
#include "affectloop/mdp.hpp"
#include "affectloop/service.hpp"
#include "affectloop/simulator.hpp"
#include "affectloop/svr.hpp"
#include "httplib.h"

using namespace affectloop;

namespace {

constexpr const char* kTrainingKey = "training";

std::string calibration_mode_name(CalibrationMode m) {
    return m == CalibrationMode::personalized ? "personalized" : "population";
}

void print_line(const nlohmann::json& j) { std::cout << j.dump() << '\n'; }

// gen-data ------------------------------------------------------------------

struct GenArgs {
    std::size_t users = 10;
    std::size_t rows = 200;
    std::uint64_t seed = 0;
    std::string out, truth, preset;
    double noise = 1.0;
    double gain = 1.0;
};

int run_gen(const GenArgs& a) {
    DatasetConfig cfg;
    cfg.users = a.users;
    cfg.rows_per_user = a.rows;
    cfg.seed = a.seed;
    cfg.noise_scale = a.noise;
    cfg.gain_scale = a.gain;
    const auto signal = a.preset.empty() ? SignalModel::defaults() : Preset::load(a.preset).signal;
    const auto ds = generate_dataset(cfg, signal);
    write_dataset_csv(a.out, ds.rows);
    write_truth_csv(a.truth, ds.truth);
    print_line({{"rows", ds.rows.size()}, {"users", ds.users.size()}, {"out", a.out}, {"truth", a.truth}});
    return 0;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
    std::string data, out, split = "70:15:15", split_by = "user";
    std::optional<double> c, epsilon, kernel_scale;
    std::uint64_t seed = 0;
    bool no_grid = false;
    bool no_calibration = false;
    bool symmetric = false;
};

int run_train(const TrainArgs& a) {
    const auto rows = read_dataset_csv(a.data);
    const auto mode = a.no_calibration ? CalibrationMode::population : CalibrationMode::personalized;
    TrainOptions opts;
    opts.space = a.symmetric ? FeatureSpace::symmetric : FeatureSpace::unit;
    if (a.c) opts.center.c = *a.c;
    if (a.epsilon) opts.center.epsilon = *a.epsilon;
    if (a.kernel_scale) opts.center.kernel_scale = *a.kernel_scale;
    if (!(opts.center.c > 0.0) || !(opts.center.epsilon >= 0.0) || !(opts.center.kernel_scale > 0.0))
        throw Error(Errc::invalid_argument, "hyperparameters", "c and kernel-scale must be positive, epsilon >= 0");
    opts.split = SplitRatios::parse(a.split);
    opts.seed = a.seed;
    opts.grid_search = !a.no_grid;
    if (a.split_by == "user")
        for (const auto& r : rows) opts.groups.push_back(r.user_id);
    const auto calibrated = calibrate_rows(rows, mode, opts.space);
    const auto result = train_regressor(calibrated, opts);
    auto j = result.model.to_json();
    j[kTrainingKey] = {{"data_rows", rows.size()},
                       {"seed", a.seed},
                       {"split", a.split},
                       {"split_by", a.split_by},
                       {"calibration", calibration_mode_name(mode)},
                       {"report", result.report.to_json()}};
    write_json_file(a.out, j, 1);
    print_line({{"out", a.out}, {"report", result.report.to_json()}});
    return 0;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
    std::string model, data, truth, confusion, baseline, report;
};

int run_eval(const EvalArgs& a) {
    const auto mj = read_json_file(a.model);
    const auto model = VaRegressor::from_json(mj);
    const auto rows = read_dataset_csv(a.data);
    const auto truth = read_truth_csv(a.truth);
    check_aligned(rows, truth);

    CalibrationMode mode = CalibrationMode::personalized;
    std::string scope = "all";
    std::vector<std::size_t> which = all_indices(rows.size());
    std::vector<std::size_t> reference;
    SplitRatios ratios;
    std::uint64_t seed = 0;
    if (mj.contains(kTrainingKey)) {
        const auto& t = mj[kTrainingKey];
        if (t.value("calibration", "personalized") == "population") mode = CalibrationMode::population;
        if (t.value("data_rows", std::size_t{0}) == rows.size()) {
            ratios = SplitRatios::parse(t.value("split", std::string("70:15:15")));
            seed = t.value("seed", std::uint64_t{0});
            std::vector<std::string> users;
            for (const auto& row : rows) users.push_back(row.user_id);
            const auto split = t.value("split_by", std::string("row")) == "user" ? split_groups(users, ratios, seed)
                                                                                : split_rows(rows.size(), ratios, seed);
            which = split.test;
            reference = split.train;
            scope = "test";
        }
    }
    const auto calibrated = calibrate_rows(rows, mode, model.feature_space());
    const auto cm = evaluate_regressor(model, calibrated, truth, which);
    cm.write_csv(a.confusion);
    nlohmann::json out{{"rows", scope},
                       {"calibration", calibration_mode_name(mode)},
                       {"accuracy", cm.accuracy()},
                       {"n", cm.total()},
                       {"confusion", a.confusion}};
    if (!a.baseline.empty()) {
        if (a.baseline != "knn") throw Error(Errc::invalid_argument, "--baseline", "only 'knn' is available");
        if (reference.empty()) {
            const auto split = split_rows(rows.size(), ratios, seed);
            which = split.test;
            reference = split.train;
        }
        const auto knn = evaluate_knn(calibrated, truth, reference, which);
        out["baseline"] = {{"name", "knn"}, {"k", 5}, {"accuracy", knn.accuracy()}, {"n", knn.total()}};
    }
    if (!a.report.empty()) {
        auto full = out;
        full["matrix"] = cm.to_json();
        write_json_file(a.report, full);
    }
    print_line(out);
    return 0;
}

// simulate ------------------------------------------------------------------

struct SimArgs {
    std::size_t students = 10;
    double minutes = 30.0;
    std::string controller = "on";
    std::uint64_t seed = 0;
    std::string preset = "decay-to-bored";
    std::string report, model, mdp_config;
};

int run_simulate(const SimArgs& a) {
    ScenarioConfig cfg;
    cfg.students = a.students;
    cfg.minutes = a.minutes;
    cfg.controller = a.controller == "on";
    cfg.seed = a.seed;
    cfg.preset = a.preset;
    cfg.validate();
    const auto preset = Preset::load(a.preset);
    std::shared_ptr<const VaRegressor> model;
    if (!a.model.empty()) {
        model = std::make_shared<VaRegressor>(VaRegressor::load(a.model));
    } else {
        StreamTrainingConfig tc;
        tc.seed = a.seed;
        model = std::make_shared<VaRegressor>(train_stream_model(preset, tc));
    }
    const auto mdp = load_mdp_model(a.mdp_config.empty() ? default_mdp_config_path() : std::filesystem::path(a.mdp_config));
    auto policy = std::make_shared<Policy>(value_iteration(mdp));
    const auto result = run_closed_loop(cfg, preset, model, policy);
    auto report = result.report();
    write_json_file(a.report, report);
    print_line({{"report", a.report},
                {"curious_dwell_fraction", report["dwell_fraction"]["recognized_mean_student"]["curious"]},
                {"suggestions", result.metrics.suggestion_count}});
    return 0;
}

// replay --------------------------------------------------------------------

struct ReplayArgs {
    std::string file, session, token;
    double speed = 1.0;
    std::size_t batch = 512;
};

int run_replay(const ReplayArgs& a) {
    // URL form: http://host:port/sessions/<id>
    const auto scheme_end = a.session.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::invalid_argument, "--session", "expected http://host:port/sessions/<id>");
    const auto path_start = a.session.find('/', scheme_end + 3);
    if (path_start == std::string::npos) throw Error(Errc::invalid_argument, "--session", "URL has no session path");
    const std::string origin = a.session.substr(0, path_start);
    std::string path = a.session.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    httplib::Client client(origin);
    client.set_read_timeout(30, 0);
    if (!a.token.empty()) client.set_bearer_token_auth(a.token);

    std::string body;
    std::size_t pending = 0, accepted = 0, rejected = 0, posts = 0;
    auto flush = [&] {
        if (pending == 0) return;
        auto res = client.Post(path + "/ingest", body, "application/x-ndjson");
        if (!res) throw Error(Errc::io, origin, "request failed: " + httplib::to_string(res.error()));
        if (res->status != 202) throw Error(Errc::conflict, path, "ingest returned HTTP " + std::to_string(res->status) + ": " + res->body);
        const auto j = nlohmann::json::parse(res->body);
        accepted += j.value("accepted", std::size_t{0});
        rejected += j.value("rejected", std::size_t{0});
        ++posts;
        body.clear();
        pending = 0;
    };
    const auto start = std::chrono::steady_clock::now();
    std::chrono::duration<double> last_offset{-1.0};
    ReplayPacer pacer = [&](std::chrono::duration<double> offset) {
        if (offset != last_offset) {
            flush();
            last_offset = offset;
            std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
        }
    };
    const auto stats = replay_file(
        a.file, a.speed,
        [&](const SensorSample& s) {
            body += render_sample(s);
            body += '\n';
            if (++pending >= a.batch) flush();
        },
        pacer);
    flush();
    print_line({{"emitted", stats.emitted}, {"accepted", accepted}, {"rejected", rejected}, {"requests", posts}});
    return rejected == 0 ? 0 : 3;
}

// serve ---------------------------------------------------------------------

struct ServeArgs {
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string storage, model, mdp_config, token, engine;
};

Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
    ServiceOptions opts;
    opts.storage_root = a.storage;
    opts.model = std::make_shared<VaRegressor>(VaRegressor::load(a.model));
    opts.model_id = std::filesystem::path(a.model).stem().string();
    const auto mdp = load_mdp_model(a.mdp_config);
    opts.policy = std::make_shared<Policy>(value_iteration(mdp));
    opts.mdp_config_id = std::filesystem::path(a.mdp_config).stem().string();
    if (!a.engine.empty()) opts.engine = EngineConfig::from_json(read_json_file(a.engine));
    if (!a.token.empty()) opts.bearer_token = a.token;
    Service service(std::move(opts));
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
    });
    std::cerr << "listening on " << a.host << ':' << a.port << '\n';
    service.listen(a.host, a.port);
    g_service = nullptr;
    return 0;
}

// mdp-analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string config, report;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

nlohmann::json chain_summary(const Chain& chain) {
    nlohmann::json j{{"ergodicity", check_ergodicity(chain).to_json()}};
    try {
        j["stationary"] = stationary_distribution(chain);
    } catch (const Error& e) {
        j["stationary"] = nullptr;
        j["stationary_error"] = e.what();
    }
    return j;
}

int run_analyze(const AnalyzeArgs& a) {
    const auto mdp = load_mdp_model(a.config);
    ViOptions vo;
    vo.tol = a.tol;
    vo.seed = a.seed;
    const auto policy = value_iteration(mdp, vo);
    if (!policy.converged) {
        std::cerr << "warning: value iteration stopped after " << policy.iterations << " sweeps with residual "
                  << policy.residual << '\n';
    }
    nlohmann::json actions = nlohmann::json::object();
    for (std::size_t act = 0; act < mdp.n_actions(); ++act) actions[mdp.actions[act]] = chain_summary(action_chain(mdp, act));
    auto stationary_named = [&](const nlohmann::json& summary) {
        if (summary["stationary"].is_null()) return nlohmann::json(nullptr);
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t s = 0; s < mdp.n_states(); ++s) j[mdp.states[s]] = summary["stationary"][s];
        return j;
    };
    auto optimal_chain = chain_summary(policy_chain(mdp, policy.optimal));
    optimal_chain["stationary_by_state"] = stationary_named(optimal_chain);
    const nlohmann::json report{{"policy", policy.to_json()},
                                {"optimal_policy_chain", optimal_chain},
                                {"action_chains", actions},
                                {"model", mdp.to_json()}};
    write_json_file(a.report, report);

    std::printf("%-12s %-18s %-18s\n", "state", "optimal", "sub-optimal");
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        const auto sub = policy.suboptimal[s];
        std::printf("%-12s %-18s %-18s\n", mdp.states[s].c_str(), policy.action_names[policy.optimal[s]].c_str(),
                    sub == kNoAction ? "-" : policy.action_names[sub].c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affective feedback engine: data, training, evaluation, simulation and serving"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset and its ground truth");
    g->add_option("--users", gen.users, "Number of users")->required()->check(CLI::Range(2, 100000));
    g->add_option("--rows", gen.rows, "Rows per user")->required()->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Random seed")->required();
    g->add_option("--out", gen.out, "Dataset CSV")->required();
    g->add_option("--truth", gen.truth, "Ground-truth CSV")->required();
    g->add_option("--noise", gen.noise, "Noise scale")->check(CLI::NonNegativeNumber);
    g->add_option("--gain", gen.gain, "Signal gain scale")->check(CLI::NonNegativeNumber);
    g->add_option("--preset", gen.preset, "Preset whose signal model is used");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the valence/arousal regressor");
    t->add_option("--data", tr.data, "Dataset CSV")->required();
    t->add_option("--out", tr.out, "Model JSON")->required();
    t->add_option("--c", tr.c, "Regularization C (grid center)");
    t->add_option("--epsilon", tr.epsilon, "Tube width");
    t->add_option("--kernel-scale", tr.kernel_scale, "Gaussian kernel scale (grid center)");
    t->add_option("--split", tr.split, "train:validation:test ratios");
    t->add_option("--seed", tr.seed, "Split seed");
    t->add_option("--split-by", tr.split_by, "Keep users whole (user) or split rows (row)")
        ->check(CLI::IsMember({"user", "row"}));
    t->add_flag("--no-grid", tr.no_grid, "Use the center hyperparameters only");
    t->add_flag("--no-calibration", tr.no_calibration, "Pool min-max extrema over all users");
    t->add_flag("--symmetric", tr.symmetric, "Calibrate into [-1, 1] instead of [0, 1]");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Four-class evaluation against ground truth");
    e->add_option("--model", ev.model, "Model JSON")->required();
    e->add_option("--data", ev.data, "Dataset CSV")->required();
    e->add_option("--truth", ev.truth, "Ground-truth CSV")->required();
    e->add_option("--confusion", ev.confusion, "Confusion matrix CSV (row proportions)")->required();
    e->add_option("--baseline", ev.baseline, "Also evaluate a baseline (knn)");
    e->add_option("--report", ev.report, "Optional JSON report");

    SimArgs sim;
    auto* s = app.add_subcommand("simulate", "Closed-loop classroom simulation");
    s->add_option("--students", sim.students, "Number of students")->required()->check(CLI::PositiveNumber);
    s->add_option("--minutes", sim.minutes, "Simulated minutes")->required()->check(CLI::PositiveNumber);
    s->add_option("--controller", sim.controller, "on or off")->required()->check(CLI::IsMember({"on", "off"}));
    s->add_option("--seed", sim.seed, "Random seed")->required();
    s->add_option("--preset", sim.preset, "Preset name or file")->required();
    s->add_option("--report", sim.report, "Report JSON")->required();
    s->add_option("--model", sim.model, "Model JSON (default: trained from the preset's stream model)");
    s->add_option("--mdp-config", sim.mdp_config, "MDP config (default: shipped config)");

    ReplayArgs rp;
    auto* r = app.add_subcommand("replay", "Replay a recorded NDJSON file into a live session");
    r->add_option("--file", rp.file, "NDJSON samples")->required();
    r->add_option("--speed", rp.speed, "Speed factor; 0 sends as fast as possible")->required()->check(CLI::NonNegativeNumber);
    r->add_option("--session", rp.session, "Session URL, http://host:port/sessions/<id>")->required();
    r->add_option("--token", rp.token, "Bearer token");
    r->add_option("--batch", rp.batch, "Maximum lines per request")->check(CLI::PositiveNumber);

    ServeArgs sv;
    auto* v = app.add_subcommand("serve", "Run the HTTP service");
    v->add_option("--port", sv.port, "Port")->required()->check(CLI::Range(1, 65535));
    v->add_option("--storage", sv.storage, "Storage directory")->required();
    v->add_option("--model", sv.model, "Model JSON")->required();
    v->add_option("--mdp-config", sv.mdp_config, "MDP config JSON")->required();
    v->add_option("--host", sv.host, "Bind address");
    v->add_option("--token", sv.token, "Require this bearer token");
    v->add_option("--engine", sv.engine, "Engine settings JSON");

    AnalyzeArgs an;
    auto* m = app.add_subcommand("mdp-analyze", "Value iteration, ergodicity and stationary analysis");
    m->add_option("--config", an.config, "MDP config JSON")->required();
    m->add_option("--report", an.report, "Analysis JSON")->required();
    m->add_option("--tol", an.tol, "Value-iteration tolerance")->check(CLI::PositiveNumber);
    m->add_option("--seed", an.seed, "Seed for the random initial values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::string msg = ex.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        std::cerr << "error: usage error [" << ex.get_name() << "]: " << msg << '\n';
        return 2;
    }

    try {
        if (*g) return run_gen(gen);
        if (*t) return run_train(tr);
        if (*e) return run_eval(ev);
        if (*s) return run_simulate(sim);
        if (*r) return run_replay(rp);
        if (*v) return run_serve(sv);
        if (*m) return run_analyze(an);
    } catch (const Error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: internal error: " << ex.what() << '\n';
        return 1;
    }
    return 1;
}

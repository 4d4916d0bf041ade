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

#include <algorithm>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "affectloop/config.hpp"
#include "affectloop/service.hpp"
#include "affectloop/simulator.hpp"
#include "doctest.h"
#include "httplib.h"
#include "test_util.hpp"

using namespace affectloop;
using testutil::run_command;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// Unknown flags and bad inputs fail with a single "error: ..." line.
void check_one_line_error(const testutil::CommandResult& r, const std::string& needle) {
    CHECK(r.status != 0);
    const auto lines = split_lines(r.err);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("error: ", 0) == 0);
    CHECK(lines[0].find(needle) != std::string::npos);
}

}  // namespace

TEST_CASE("gen-data, train and eval produce a labelled 4x4 confusion matrix") {
    testutil::TempDir dir("cli");
    const auto cli = testutil::cli();
    auto r = run_command(cli + " gen-data --users 4 --rows 60 --seed 3 --out " + quote(dir / "d.csv") + " --truth " +
                             quote(dir / "t.csv"),
                         dir.path());
    REQUIRE(r.status == 0);
    r = run_command(cli + " train --data " + quote(dir / "d.csv") + " --out " + quote(dir / "m.json") + " --no-grid",
                    dir.path());
    REQUIRE(r.status == 0);
    const auto model = read_json_file(dir / "m.json");
    CHECK(model.contains("training"));
    r = run_command(cli + " eval --model " + quote(dir / "m.json") + " --data " + quote(dir / "d.csv") + " --truth " +
                        quote(dir / "t.csv") + " --confusion " + quote(dir / "c.csv") + " --baseline knn",
                    dir.path());
    REQUIRE(r.status == 0);
    const auto summary = nlohmann::json::parse(split_lines(r.out).back());
    CHECK(summary.contains("accuracy"));
    const auto lines = split_lines(testutil::read_text(dir / "c.csv"));
    REQUIRE(lines.size() == 5);
    const char* labels[] = {"bored", "satisfied", "curious", "confused"};
    for (int i = 0; i < 4; ++i) {
        const auto& l = lines[i + 1];
        CHECK(l.rfind(std::string(labels[i]) + ",", 0) == 0);
        CHECK(std::count(l.begin(), l.end(), ',') == 4);
    }
}

TEST_CASE("mdp-analyze prints the policy table") {
    testutil::TempDir dir("cli");
    const auto r = run_command(testutil::cli() + " mdp-analyze --config " + quote(default_mdp_config_path()) +
                                   " --report " + quote(dir / "a.json"),
                               dir.path());
    REQUIRE(r.status == 0);
    const auto lines = split_lines(r.out);
    const auto row = [&](const std::string& state) {
        for (const auto& l : lines) {
            std::istringstream in(l);
            std::string s, opt, sub;
            in >> s >> opt >> sub;
            if (s == state) return opt + " " + sub;
        }
        return std::string();
    };
    CHECK(row("bored") == "enrich_content simplify_content");
    CHECK(row("satisfied") == "no_change decrease_pace");
    CHECK(row("confused") == "simplify_content decrease_pace");
    CHECK(row("curious") == "decrease_pace enrich_content");
    const auto report = read_json_file(dir / "a.json");
    CHECK(report["policy"]["converged"] == true);
    CHECK(report.contains("optimal_policy_chain"));
}

TEST_CASE("simulate is reproducible under the seed") {
    testutil::TempDir dir("cli");
    const std::string base = testutil::cli() + " simulate --students 3 --minutes 4 --controller on --seed 5 --preset decay-to-bored --report ";
    REQUIRE(run_command(base + quote(dir / "a.json"), dir.path()).status == 0);
    REQUIRE(run_command(base + quote(dir / "b.json"), dir.path()).status == 0);
    CHECK(testutil::read_text(dir / "a.json") == testutil::read_text(dir / "b.json"));
    const auto rep = read_json_file(dir / "a.json");
    CHECK(rep.contains("metrics"));
}

TEST_CASE("errors are one machine-parsable line naming the offender") {
    testutil::TempDir dir("cli");
    const auto cli = testutil::cli();
    check_one_line_error(run_command(cli + " gen-data --users 2 --rows 5 --seed 1 --out x --truth y --bogus 3", dir.path()),
                         "--bogus");
    check_one_line_error(run_command(cli + " train --data " + quote(dir / "missing.csv") + " --out m.json", dir.path()),
                         "missing.csv");
    testutil::write_text(dir / "bad.json", "{\"version\": 1}");
    check_one_line_error(run_command(cli + " mdp-analyze --config " + quote(dir / "bad.json") + " --report r.json", dir.path()),
                         "bad.json");
    check_one_line_error(run_command(cli + " simulate --students 2 --minutes 1 --controller maybe --seed 1 --preset steady --report r.json", dir.path()),
                         "controller");
    CHECK(run_command(cli + " frobnicate", dir.path()).status != 0);
    CHECK(run_command(cli, dir.path()).status != 0);
}

TEST_CASE("eval rejects misaligned truth") {
    testutil::TempDir dir("cli");
    const auto cli = testutil::cli();
    REQUIRE(run_command(cli + " gen-data --users 2 --rows 40 --seed 1 --out " + quote(dir / "d.csv") + " --truth " + quote(dir / "t.csv"),
                        dir.path()).status == 0);
    REQUIRE(run_command(cli + " gen-data --users 2 --rows 41 --seed 1 --out " + quote(dir / "d2.csv") + " --truth " + quote(dir / "t2.csv"),
                        dir.path()).status == 0);
    REQUIRE(run_command(cli + " train --data " + quote(dir / "d.csv") + " --out " + quote(dir / "m.json") + " --no-grid --split-by row",
                        dir.path()).status == 0);
    check_one_line_error(run_command(cli + " eval --model " + quote(dir / "m.json") + " --data " + quote(dir / "d.csv") +
                                         " --truth " + quote(dir / "t2.csv") + " --confusion " + quote(dir / "c.csv"),
                                     dir.path()),
                         "truth");
}

TEST_CASE("replay streams the fixture into a live service") {
    testutil::TempDir dir("cli");
    ServiceOptions opt;
    opt.storage_root = dir / "store";
    opt.model = std::make_shared<const VaRegressor>(train_stream_model(Preset::load("decay-to-bored")));
    opt.policy = std::make_shared<const Policy>(value_iteration(load_mdp_model(default_mdp_config_path())));
    Service svc(opt);
    const int port = svc.start();
    httplib::Client http("127.0.0.1", port);
    const auto created = http.Post("/sessions", R"({"roster":["s01","s02","s03"]})", "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const auto url = "http://127.0.0.1:" + std::to_string(port) + "/sessions/";
    const auto id = nlohmann::json::parse(created->body)["session_id"].get<std::string>();
    const auto r = run_command(testutil::cli() + " replay --file " + quote(testutil::fixture("session_samples.ndjson")) +
                                   " --speed 0 --batch 500 --session " + url + id,
                               dir.path());
    REQUIRE(r.status == 0);
    const auto summary = nlohmann::json::parse(split_lines(r.out).back());
    CHECK(summary["emitted"] == 6480);
    CHECK(summary["accepted"] == 6480);
    CHECK(summary["rejected"] == 0);
    const auto session = svc.find_session(id);
    REQUIRE(session);
    CHECK(session->data_clock_ms() == 540000);
    svc.stop();
}

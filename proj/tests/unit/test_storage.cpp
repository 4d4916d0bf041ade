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

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "affectloop/config.hpp"
#include "affectloop/error.hpp"
#include "affectloop/storage.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace affectloop;

namespace {

std::shared_ptr<const VaRegressor> tiny_model() {
    static const auto m = [] {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<TrainingRow> rows(60);
        for (auto& r : rows) {
            for (auto& x : r.x) x = u(rng);
            r.valence = 1.0 + 8.0 * r.x[0];
            r.arousal = 1.0 + 8.0 * r.x[1];
        }
        TrainOptions opt;
        opt.grid_search = false;
        return std::make_shared<const VaRegressor>(train_regressor(rows, opt).model);
    }();
    return m;
}

std::shared_ptr<const Policy> policy() {
    static const auto p = std::make_shared<const Policy>(value_iteration(load_mdp_model(default_mdp_config_path())));
    return p;
}

struct Stored {
    SessionRecord record;
    std::unique_ptr<Session> session;
};

Stored make_session(const std::string& id) {
    Stored s;
    s.record.session_id = id;
    s.record.roster = {{"a", {PacePreference::fast, ContentStyle::illustrations}}, {"b", {}}};
    s.record.model_id = "m1";
    s.record.mdp_config_id = "default";
    s.record.created_ms = 1000;
    s.session = std::make_unique<Session>(id, s.record.roster, tiny_model(), policy(), s.record.engine, 1000);
    for (int t = 0; t < 5; ++t)
        for (const char* who : {"a", "b"}) {
            s.session->ingest({who, 1000 + t * 1000, Channel::hr, 70.0 + t});
            s.session->ingest({who, 1000 + t * 1000, Channel::rr, 850.0 - t});
        }
    s.session->record_intervention(InterventionKind::pace, 4000, "a");
    s.session->record_intervention(InterventionKind::content, 4500);
    s.session->end(6000);
    s.record.status = SessionStatus::ended;
    s.record.ended_ms = 6000;
    return s;
}

}  // namespace

TEST_CASE("save then load round-trips config, log and metrics") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    auto s = make_session("sess-1");
    store.persist(s.record, *s.session);
    CHECK(store.exists("sess-1"));
    CHECK(store.list() == std::vector<std::string>{"sess-1"});
    const auto loaded = store.load("sess-1");
    CHECK(loaded.record == s.record);
    CHECK(loaded.metrics == s.session->metrics());
    CHECK(loaded.events == s.session->events());
    CHECK(loaded.calibration.to_json() == s.session->calibration().to_json());
    CHECK(replay_metrics(loaded.events) == loaded.metrics);
    CHECK(loaded.metrics.intervention_count == 2);
}

TEST_CASE("record JSON round trip") {
    SessionRecord r;
    r.session_id = "x";
    r.roster = {{"s1", {PacePreference::slow, ContentStyle::descriptions}}};
    r.engine.window = 20;
    r.status = SessionStatus::live;
    CHECK(SessionRecord::from_json(r.to_json()) == r);
    CHECK_THROWS_AS(SessionRecord::from_json(nlohmann::json{{"session_id", 3}}), Error);
}

TEST_CASE("truncated event log names the byte offset") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    auto s = make_session("sess-2");
    store.persist(s.record, *s.session);
    const auto log = store.dir_for("sess-2") / "events.ndjson";
    auto text = testutil::read_text(log);
    // drop the trailing newline and half of the last line
    const auto last_start = text.rfind('\n', text.size() - 2) + 1;
    text.resize(last_start + (text.size() - last_start) / 2);
    testutil::write_text(log, text);
    try {
        store.load("sess-2");
        FAIL("expected corrupt");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt);
        CHECK(std::string(e.what()).find("byte offset " + std::to_string(last_start)) != std::string::npos);
    }
    CHECK_THROWS_AS(read_event_log(log), Error);
}

TEST_CASE("unknown session is not found") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    try {
        store.load("nope");
        FAIL("expected not found");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::not_found);
    }
    CHECK_FALSE(store.exists("nope"));
    CHECK(store.list().empty());
}

TEST_CASE("metrics that disagree with the log are corrupt") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    auto s = make_session("sess-3");
    store.persist(s.record, *s.session);
    auto m = s.session->metrics();
    m.intervention_count += 1;
    store.write_metrics("sess-3", m);
    try {
        store.load("sess-3");
        FAIL("expected corrupt");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt);
    }
}

TEST_CASE("missing artifact is named") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    auto s = make_session("sess-4");
    store.persist(s.record, *s.session);
    std::filesystem::remove(store.dir_for("sess-4") / "calibration.json");
    try {
        store.load("sess-4");
        FAIL("expected corrupt");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt);
        CHECK(std::string(e.what()).find("calibration.json") != std::string::npos);
    }
}

TEST_CASE("event log writer appends line by line") {
    testutil::TempDir dir("store");
    const auto path = dir / "log.ndjson";
    {
        EventLogWriter w(path);
        w.append({"tick", 10, {{"dt_ms", 10}}});
        w.append({"session_ended", 20, nlohmann::json::object()});
        // flushed without closing
        CHECK(read_event_log(path).size() == 2);
    }
    const auto events = read_event_log(path);
    CHECK(events[0].type == "tick");
    CHECK(events[1].ts_ms == 20);
    testutil::write_text(dir / "v2.ndjson", R"({"v":2,"type":"tick","ts_ms":1,"data":{}})" "\n");
    CHECK_THROWS_AS(read_event_log(dir / "v2.ndjson"), Error);
}

TEST_CASE("session ids cannot escape the storage root") {
    testutil::TempDir dir("store");
    SessionStore store(dir.path());
    CHECK_THROWS_AS(store.dir_for("../evil"), Error);
    CHECK_THROWS_AS(store.dir_for("a/b"), Error);
    CHECK_THROWS_AS(store.dir_for(""), Error);
}

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

#include <atomic>
#include <chrono>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "affectloop/config.hpp"
#include "affectloop/error.hpp"
#include "affectloop/service.hpp"
#include "affectloop/simulator.hpp"
#include "affectloop/storage.hpp"
#include "doctest.h"
#include "httplib.h"
#include "test_util.hpp"

using namespace affectloop;
using nlohmann::json;

namespace {

std::shared_ptr<const VaRegressor> stream_model() {
    static const auto m = std::make_shared<const VaRegressor>(train_stream_model(Preset::load("decay-to-bored")));
    return m;
}

std::shared_ptr<const Policy> default_policy() {
    static const auto p = std::make_shared<const Policy>(value_iteration(load_mdp_model(default_mdp_config_path())));
    return p;
}

struct Fixture {
    std::vector<std::string> calibration_lines;
    std::vector<std::string> live_lines;
    std::vector<std::string> students;
};

Fixture load_fixture() {
    const auto meta = read_json_file(testutil::fixture("session_fixture.json"));
    const std::int64_t cut = meta["calibration_end_ms"].get<std::int64_t>();
    Fixture f;
    f.students = meta["students"].get<std::vector<std::string>>();
    std::istringstream in(testutil::read_text(testutil::fixture(meta["samples"].get<std::string>())));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        (parse_sample(line).ts_ms <= cut ? f.calibration_lines : f.live_lines).push_back(line);
    }
    return f;
}

struct Server {
    testutil::TempDir dir{"svc"};
    std::unique_ptr<Service> service;
    std::unique_ptr<httplib::Client> client;

    explicit Server(std::optional<std::string> token = std::nullopt) {
        ServiceOptions opt;
        opt.storage_root = dir.path();
        opt.model = stream_model();
        opt.policy = default_policy();
        opt.bearer_token = token;
        opt.heartbeat = std::chrono::milliseconds(100);
        service = std::make_unique<Service>(opt);
        const int port = service->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(30, 0);
    }
    ~Server() { service->stop(); }

    httplib::Result post(const std::string& path, const json& body) {
        return client->Post(path, body.dump(), "application/json");
    }

    std::string create(const std::vector<std::string>& roster, json prefs = json::object()) {
        const auto r = post("/sessions", {{"roster", roster}, {"preferences", prefs}});
        REQUIRE(r);
        REQUIRE(r->status == 201);
        return json::parse(r->body)["session_id"].get<std::string>();
    }

    void ingest(const std::string& id, const std::vector<std::string>& lines, std::size_t chunk = 600) {
        for (std::size_t i = 0; i < lines.size(); i += chunk) {
            std::string body;
            for (std::size_t j = i; j < std::min(lines.size(), i + chunk); ++j) body += lines[j] + "\n";
            const auto r = client->Post("/sessions/" + id + "/ingest", body, "application/x-ndjson");
            REQUIRE(r);
            REQUIRE(r->status == 202);
            const auto rep = json::parse(r->body);
            REQUIRE(rep["rejected"] == 0);
        }
    }
};

struct SseEvent {
    std::string type;
    std::string data;
};

std::vector<SseEvent> parse_sse(const std::string& text) {
    std::vector<SseEvent> out;
    std::size_t pos = 0;
    while (true) {
        const auto end = text.find("\n\n", pos);
        if (end == std::string::npos) break;
        const auto block = text.substr(pos, end - pos);
        pos = end + 2;
        SseEvent e;
        std::istringstream in(block);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("event: ", 0) == 0) e.type = line.substr(7);
            if (line.rfind("data: ", 0) == 0) e.data = line.substr(6);
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace

TEST_CASE("full lifecycle over HTTP with the recorded fixture") {
    const auto fx = load_fixture();
    Server srv;
    CHECK(srv.client->Get("/health")->status == 200);
    const auto id = srv.create(fx.students);

    auto st = json::parse(srv.client->Get("/sessions/" + id + "/state")->body);
    CHECK(st["status"] == "calibrating");

    // subscribe before any tick can happen
    std::string received;
    std::mutex rx_mu;
    std::atomic<bool> got_first{false};
    std::thread listener([&] {
        httplib::Client c("127.0.0.1", srv.service->port());
        c.set_read_timeout(60, 0);
        c.Get("/sessions/" + id + "/stream", [&](const char* data, std::size_t n) {
            std::lock_guard lock(rx_mu);
            received.append(data, n);
            got_first = true;
            return true;
        });
    });
    for (int i = 0; i < 100 && !got_first; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    REQUIRE(got_first);

    srv.ingest(id, fx.calibration_lines);
    auto r = srv.post("/sessions/" + id + "/go-live", json::object());
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(srv.post("/sessions/" + id + "/go-live", json::object())->status == 409);

    const std::size_t half = fx.live_lines.size() / 2;
    srv.ingest(id, {fx.live_lines.begin(), fx.live_lines.begin() + static_cast<std::ptrdiff_t>(half)});
    st = json::parse(srv.client->Get("/sessions/" + id + "/state")->body);
    CHECK(st["status"] == "live");
    REQUIRE_FALSE(st["collective"].is_null());
    CHECK(st["collective"]["students"].size() == fx.students.size());
    REQUIRE_FALSE(st["suggestion"].is_null());
    CHECK(st["suggestion"]["collective_label"] == "curious");
    CHECK(st["suggestion"]["action"] == "decrease_pace");
    CHECK(st["suggestion"]["rank"] == "optimal");

    r = srv.post("/sessions/" + id + "/action", {{"action", "decrease_pace"}, {"source", "applied"}});
    CHECK(r->status == 200);
    r = srv.post("/sessions/" + id + "/action", {{"action", "enrich_content"}, {"source", "override"}});
    CHECK(r->status == 200);
    r = srv.post("/sessions/" + id + "/action", {{"action", "simplify_content"}, {"source", "infeasible"}});
    CHECK(r->status == 200);
    CHECK(json::parse(r->body)["infeasible"] == json::array({"simplify_content"}));
    r = srv.post("/sessions/" + id + "/action", {{"action", "levitate"}, {"source", "applied"}});
    CHECK(r->status == 422);
    r = srv.post("/sessions/" + id + "/action", {{"action", "no_change"}});
    CHECK(r->status == 400);
    r = srv.post("/sessions/" + id + "/intervention", {{"kind", "pace"}, {"student_id", fx.students[0]}});
    CHECK(r->status == 200);
    CHECK(json::parse(r->body)["intervention_count"] == 2);

    srv.ingest(id, {fx.live_lines.begin() + static_cast<std::ptrdiff_t>(half), fx.live_lines.end()});
    st = json::parse(srv.client->Get("/sessions/" + id + "/state")->body);
    CHECK(st["suggestion"]["collective_label"] == "confused");
    CHECK(st["suggestion"]["action"] == "decrease_pace");
    CHECK(st["suggestion"]["rank"] == "suboptimal");

    const auto session = srv.service->find_session(id);
    REQUIRE(session);
    const auto engine_events = session->events();

    r = srv.post("/sessions/" + id + "/end", json::object());
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto end_metrics = SessionMetrics::from_json(json::parse(r->body)["metrics"]);
    listener.join();

    // the stream carries exactly the engine's states and suggestions
    const auto sse = parse_sse(received);
    std::vector<std::string> sse_states, sse_suggestions, log_states, log_suggestions;
    for (const auto& e : sse) {
        if (e.type == "state") sse_states.push_back(json::parse(e.data).dump());
        if (e.type == "suggestion") sse_suggestions.push_back(json::parse(e.data).dump());
    }
    for (const auto& e : engine_events) {
        if (e.type == event_type::tick && !e.data["state"].is_null()) log_states.push_back(e.data["state"].dump());
        if (e.type == event_type::suggestion) log_suggestions.push_back(e.data.dump());
    }
    CHECK(sse_states == log_states);
    CHECK(sse_suggestions == log_suggestions);
    CHECK_FALSE(sse_suggestions.empty());

    // persisted artifacts reload and replay to the same metrics
    SessionStore store(srv.dir.path());
    const auto loaded = store.load(id);
    CHECK(loaded.record.status == SessionStatus::ended);
    CHECK(loaded.record.roster.size() == fx.students.size());
    CHECK(loaded.metrics == end_metrics);
    CHECK(loaded.metrics == session->metrics());
    CHECK(replay_metrics(loaded.events) == end_metrics);
    CHECK(loaded.events == session->events());
    CHECK(end_metrics.intervention_count == 2);

    // ended sessions refuse mutation but stay readable
    CHECK(srv.client->Post("/sessions/" + id + "/ingest", fx.live_lines.back(), "application/x-ndjson")->status == 409);
    CHECK(srv.post("/sessions/" + id + "/end", json::object())->status == 409);
    CHECK(json::parse(srv.client->Get("/sessions/" + id + "/state")->body)["status"] == "ended");
}

TEST_CASE("stored sessions are readable after a restart") {
    const auto fx = load_fixture();
    testutil::TempDir keep("svc-keep");
    std::string id;
    {
        ServiceOptions opt;
        opt.storage_root = keep.path();
        opt.model = stream_model();
        opt.policy = default_policy();
        Service svc(opt);
        httplib::Client c("127.0.0.1", svc.start());
        id = json::parse(c.Post("/sessions", json{{"roster", {"s01"}}}.dump(), "application/json")->body)["session_id"];
        CHECK(c.Post("/sessions/" + id + "/end", "{}", "application/json")->status == 200);
    }
    ServiceOptions opt;
    opt.storage_root = keep.path();
    opt.model = stream_model();
    opt.policy = default_policy();
    Service svc(opt);
    httplib::Client c("127.0.0.1", svc.start());
    const auto r = c.Get("/sessions/" + id + "/state");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto st = json::parse(r->body);
    CHECK(st["read_only"] == true);
    CHECK(st["status"] == "ended");
    const auto list = json::parse(c.Get("/sessions")->body)["sessions"];
    CHECK(list.size() == 1);
    const auto next = json::parse(c.Post("/sessions", json{{"roster", {"s01"}}}.dump(), "application/json")->body);
    CHECK(next["session_id"] != id);
}

TEST_CASE("go-live before any samples lists every student") {
    Server srv;
    const auto id = srv.create({"a", "b", "c"});
    const auto r = srv.post("/sessions/" + id + "/go-live", json::object());
    REQUIRE(r);
    CHECK(r->status == 409);
    const auto body = json::parse(r->body);
    CHECK(body["error"]["code"] == "conflict");
    CHECK(body["shortfall"].size() == 3);
    for (const char* s : {"a", "b", "c"}) CHECK(body["shortfall"][s].get<int>() > 0);
}

TEST_CASE("ingest reports partial acceptance per line") {
    Server srv;
    const auto id = srv.create({"s1"});
    const std::string body = R"({"student_id":"s1","ts_ms":1000,"channel":"hr","value":70})"
                             "\n{\"student_id\":\"s1\",\n"
                             R"({"student_id":"s1","ts_ms":1000,"channel":"rr","value":850})";
    const auto r = srv.client->Post("/sessions/" + id + "/ingest", body, "application/x-ndjson");
    REQUIRE(r);
    CHECK(r->status == 202);
    const auto rep = json::parse(r->body);
    CHECK(rep["accepted"] == 2);
    CHECK(rep["rejected"] == 1);
    REQUIRE(rep["errors"].size() == 1);
    CHECK(rep["errors"][0]["line"] == 2);
    CHECK_FALSE(rep["errors"][0]["reason"].get<std::string>().empty());
}

TEST_CASE("error codes") {
    Server srv;
    CHECK(srv.client->Get("/sessions/nope/state")->status == 404);
    CHECK(srv.post("/sessions/nope/go-live", json::object())->status == 404);
    CHECK(srv.client->Post("/sessions", "{not json", "application/json")->status == 400);
    CHECK(srv.post("/sessions", {{"roster", json::array()}})->status == 400);
    CHECK(srv.post("/sessions", {{"roster", {"a"}}, {"preferences", {{"zed", {{"pace_preference", "fast"}}}}}})->status ==
          400);
    CHECK(srv.post("/sessions", {{"roster", {"a"}}, {"model_id", "other"}})->status == 404);
    const auto id = srv.create({"a", "b"}, {{"a", {{"pace_preference", "fast"}, {"content_style", "illustrations"}}}});
    CHECK(srv.post("/sessions/" + id + "/action", {{"action", "no_change"}, {"source", "applied"}})->status == 409);
    CHECK(srv.post("/sessions/" + id + "/intervention", {{"kind", "dance"}})->status == 400);
    const auto bad = srv.post("/sessions/" + id + "/action", {{"action", "levitate"}, {"source", "applied"}});
    CHECK(bad->status == 422);
    CHECK(json::parse(bad->body)["error"]["code"] == "unknown_action");
}

TEST_CASE("bearer token guards every route") {
    Server srv(std::string("s3cret"));
    CHECK(srv.client->Get("/sessions")->status == 401);
    httplib::Headers auth{{"Authorization", "Bearer s3cret"}};
    CHECK(srv.client->Get("/sessions", auth)->status == 200);
}

TEST_CASE("status mapping") {
    CHECK(http_status_for(Error(Errc::parse, "x", "m")) == 400);
    CHECK(http_status_for(Error(Errc::not_found, "x", "m")) == 404);
    CHECK(http_status_for(Error(Errc::conflict, "x", "m")) == 409);
    CHECK(http_status_for(Error(Errc::io, "x", "m")) == 500);
}

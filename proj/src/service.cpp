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

#include "affectloop/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <list>
#include <map>
#include <set>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "affectloop/error.hpp"
#include "affectloop/storage.hpp"
#include "httplib.h"

namespace affectloop {

int http_status_for(const Error& e) {
    switch (e.code()) {
        case Errc::parse:
        case Errc::schema:
        case Errc::range:
        case Errc::ordering:
        case Errc::invalid_argument: return 400;
        case Errc::not_found:
        case Errc::session: return 404;
        case Errc::conflict:
        case Errc::precondition:
        case Errc::infeasible:
        case Errc::calibration_required: return 409;
        default: return 500;
    }
}

namespace {

std::int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct Subscriber {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::string, std::string>> queue;
    bool closed = false;

    void push(std::string type, std::string data) {
        {
            std::lock_guard lock(mu);
            if (closed) return;
            queue.emplace_back(std::move(type), std::move(data));
        }
        cv.notify_one();
    }
    void close() {
        {
            std::lock_guard lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

struct LiveSession {
    std::mutex record_mu;
    SessionRecord record;
    std::shared_ptr<Session> session;
    std::unique_ptr<EventLogWriter> log;
    std::mutex sub_mu;
    std::list<std::shared_ptr<Subscriber>> subscribers;

    void broadcast(const std::string& type, const std::string& data) {
        std::lock_guard lock(sub_mu);
        for (auto& s : subscribers) s->push(type, data);
    }
    void close_all() {
        std::lock_guard lock(sub_mu);
        for (auto& s : subscribers) s->close();
    }
};

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                nlohmann::json extra = nlohmann::json::object()) {
    extra["error"] = {{"code", code}, {"message", message}};
    send_json(res, status, extra);
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        auto j = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
        if (!j.is_object()) throw Error(Errc::schema, "body", "expected a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::parse, "body", e.what());
    }
}

std::string required_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw Error(Errc::schema, key, "missing field");
    if (!j[key].is_string()) throw Error(Errc::schema, key, "expected a string");
    return j[key].get<std::string>();
}

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    SessionStore store;
    httplib::Server server;
    std::thread thread;
    std::atomic<int> bound_port{0};
    std::atomic<bool> stopping{false};
    mutable std::shared_mutex mu;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions;
    std::size_t next_id = 1;

    explicit Impl(ServiceOptions opts) : options(std::move(opts)), store(options.storage_root) {
        if (!options.model || !options.model->trained()) throw Error(Errc::untrained, "model", "service needs a trained model");
        if (!options.policy) throw Error(Errc::precondition, "policy", "service needs a policy");
        for (const auto& id : store.list()) {
            if (id.rfind("sess-", 0) != 0) continue;
            try {
                next_id = std::max<std::size_t>(next_id, std::stoul(id.substr(5)) + 1);
            } catch (const std::exception&) {
            }
        }
        routes();
    }

    std::shared_ptr<LiveSession> live(const std::string& id) const {
        std::shared_lock lock(mu);
        const auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    std::shared_ptr<LiveSession> require(const std::string& id) const {
        auto s = live(id);
        if (!s) throw Error(Errc::not_found, id, "unknown session");
        return s;
    }

    template <typename Fn>
    auto guarded(Fn fn) {
        return [this, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, http_status_for(e), errc_name(e.code()), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    }

    void routes() {
        if (options.bearer_token) {
            server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
                if (req.get_header_value("Authorization") == "Bearer " + *options.bearer_token)
                    return httplib::Server::HandlerResponse::Unhandled;
                send_error(res, 401, "unauthorized", "missing or wrong bearer token");
                return httplib::Server::HandlerResponse::Handled;
            });
        }
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });
        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) { list(res); }));
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) { create(req, res); }));
        server.Post(R"(/sessions/([^/]+)/ingest)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) { ingest(req, res); }));
        server.Post(R"(/sessions/([^/]+)/go-live)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) { go_live(req, res); }));
        server.Get(R"(/sessions/([^/]+)/state)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) { state(req, res); }));
        server.Post(R"(/sessions/([^/]+)/action)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) { action(req, res); }));
        server.Post(R"(/sessions/([^/]+)/intervention)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) { intervention(req, res); }));
        server.Get(R"(/sessions/([^/]+)/stream)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) { stream(req, res); }));
        server.Post(R"(/sessions/([^/]+)/end)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) { end(req, res); }));
    }

    void list(httplib::Response& res) {
        nlohmann::json out = nlohmann::json::array();
        std::set<std::string> seen;
        {
            std::shared_lock lock(mu);
            for (const auto& [id, ls] : sessions) {
                out.push_back({{"session_id", id}, {"status", status_name(ls->session->status())}});
                seen.insert(id);
            }
        }
        for (const auto& id : store.list())
            if (!seen.count(id)) out.push_back({{"session_id", id}, {"status", "stored"}});
        send_json(res, 200, {{"sessions", out}});
    }

    void create(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        if (!body.contains("roster") || !body["roster"].is_array() || body["roster"].empty())
            throw Error(Errc::schema, "roster", "expected a non-empty array of student ids");
        const auto prefs = body.value("preferences", nlohmann::json::object());
        if (!prefs.is_object()) throw Error(Errc::schema, "preferences", "expected an object keyed by student id");
        std::vector<RosterEntry> roster;
        for (const auto& r : body["roster"]) {
            RosterEntry entry;
            if (r.is_string()) {
                entry.student_id = r.get<std::string>();
            } else if (r.is_object() && r.contains("student_id") && r["student_id"].is_string()) {
                entry.student_id = r["student_id"].get<std::string>();
                if (r.contains("preferences")) entry.preferences = StudentPreferences::from_json(r["preferences"]);
            } else {
                throw Error(Errc::schema, "roster", "entries must be student id strings");
            }
            if (prefs.contains(entry.student_id)) entry.preferences = StudentPreferences::from_json(prefs[entry.student_id]);
            roster.push_back(std::move(entry));
        }
        for (const auto& [sid, _] : prefs.items()) {
            if (std::none_of(roster.begin(), roster.end(), [&](const RosterEntry& e) { return e.student_id == sid; }))
                throw Error(Errc::schema, "preferences", "student '" + sid + "' is not on the roster");
        }
        const auto model_id = body.contains("model_id") ? required_string(body, "model_id") : options.model_id;
        const auto mdp_id = body.contains("mdp_config_id") ? required_string(body, "mdp_config_id") : options.mdp_config_id;
        if (model_id != options.model_id) throw Error(Errc::not_found, model_id, "unknown model_id");
        if (mdp_id != options.mdp_config_id) throw Error(Errc::not_found, mdp_id, "unknown mdp_config_id");

        auto ls = std::make_shared<LiveSession>();
        std::string id;
        {
            std::unique_lock lock(mu);
            id = "sess-" + std::to_string(next_id++);
            ls->record.session_id = id;
            ls->record.roster = roster;
            ls->record.model_id = model_id;
            ls->record.mdp_config_id = mdp_id;
            ls->record.engine = options.engine;
            ls->record.created_ms = wall_ms();
            ls->session = std::make_shared<Session>(id, roster, options.model, options.policy, options.engine, 0);
            store.write_record(ls->record);
            ls->log = std::make_unique<EventLogWriter>(store.dir_for(id) / "events.ndjson");
            LiveSession* raw = ls.get();
            ls->session->set_sink([raw](const Event& e) {
                raw->log->append(e);
                if (e.type == event_type::tick && !e.data.at("state").is_null()) {
                    raw->broadcast("state", e.data.at("state").dump());
                } else if (e.type == event_type::suggestion) {
                    raw->broadcast("suggestion", e.data.dump());
                }
            });
            sessions[id] = ls;
        }
        send_json(res, 201, {{"session_id", id}, {"status", "calibrating"}});
    }

    void ingest(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        const auto report = ls->session->ingest_ndjson(req.body);
        send_json(res, 202, report.to_json());
    }

    void go_live(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        if (ls->session->status() != SessionStatus::calibrating) {
            throw Error(Errc::conflict, ls->record.session_id,
                        "cannot go live from status " + std::string(status_name(ls->session->status())));
        }
        const auto shortfall = ls->session->calibration_shortfall();
        if (!shortfall.empty()) {
            send_error(res, 409, "conflict", "students below the calibration minimum", {{"shortfall", shortfall}});
            return;
        }
        ls->session->go_live();
        {
            std::lock_guard lock(ls->record_mu);
            ls->record.status = SessionStatus::live;
            store.write_record(ls->record);
        }
        store.write_calibration(ls->record.session_id, ls->session->calibration());
        send_json(res, 200, {{"session_id", ls->record.session_id}, {"status", "live"}});
    }

    void state(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (auto ls = live(id)) {
            send_json(res, 200, *ls->session->snapshot());
            return;
        }
        const auto stored = store.load(id);
        send_json(res, 200,
                  {{"session_id", id},
                   {"status", status_name(stored.record.status)},
                   {"read_only", true},
                   {"record", stored.record.to_json()},
                   {"metrics", stored.metrics.to_json()}});
    }

    void action(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        const auto body = parse_body(req);
        const auto name = required_string(body, "action");
        const auto a = action_from_name(name);
        if (!a) {
            send_error(res, 422, "unknown_action", "action '" + name + "' is not in the action set");
            return;
        }
        const auto src_name = required_string(body, "source");
        const auto src = source_from_name(src_name);
        if (!src) throw Error(Errc::schema, "source", "expected applied, override or infeasible");
        std::optional<std::string> student;
        if (body.contains("student_id") && !body["student_id"].is_null()) student = required_string(body, "student_id");
        auto& s = *ls->session;
        s.record_action(*a, *src, s.data_clock_ms(), student);
        nlohmann::json infeasible = nlohmann::json::array();
        for (Action x : s.infeasible_actions()) infeasible.push_back(action_name(x));
        send_json(res, 200, {{"action", name}, {"source", src_name}, {"infeasible", infeasible}});
    }

    void intervention(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        const auto body = parse_body(req);
        const auto kind = intervention_from_name(required_string(body, "kind"));
        if (!kind) throw Error(Errc::schema, "kind", "expected pace or content");
        std::optional<std::string> student;
        if (body.contains("student_id") && !body["student_id"].is_null()) student = required_string(body, "student_id");
        auto& s = *ls->session;
        s.record_intervention(*kind, s.data_clock_ms(), student);
        send_json(res, 200, {{"intervention_count", s.metrics().intervention_count}});
    }

    void stream(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        auto sub = std::make_shared<Subscriber>();
        {
            std::lock_guard lock(ls->sub_mu);
            if (ls->session->status() == SessionStatus::ended || stopping) sub->closed = true;
            ls->subscribers.push_back(sub);
        }
        const auto heartbeat = options.heartbeat;
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [sub, heartbeat](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(sub->mu);
                sub->cv.wait_for(lock, heartbeat, [&] { return sub->closed || !sub->queue.empty(); });
                std::string out;
                if (sub->queue.empty() && !sub->closed) {
                    out = "event: heartbeat\ndata: {\"ts_ms\":" + std::to_string(wall_ms()) + "}\n\n";
                }
                while (!sub->queue.empty()) {
                    auto [type, data] = std::move(sub->queue.front());
                    sub->queue.pop_front();
                    out += "event: " + type + "\ndata: " + data + "\n\n";
                }
                const bool closed = sub->closed;
                lock.unlock();
                if (!out.empty() && !sink.write(out.data(), out.size())) return false;
                if (closed) {
                    sink.done();
                    return true;
                }
                return true;
            },
            [ls, sub](bool) {
                sub->close();
                std::lock_guard lock(ls->sub_mu);
                ls->subscribers.remove(sub);
            });
    }

    void end(const httplib::Request& req, httplib::Response& res) {
        auto ls = require(req.matches[1]);
        auto& s = *ls->session;
        s.end();
        {
            std::lock_guard lock(ls->record_mu);
            ls->record.status = SessionStatus::ended;
            ls->record.ended_ms = wall_ms();
            store.write_record(ls->record);
        }
        store.write_calibration(ls->record.session_id, s.calibration());
        store.write_metrics(ls->record.session_id, s.metrics());
        ls->close_all();
        send_json(res, 200, {{"session_id", ls->record.session_id}, {"status", "ended"}, {"metrics", s.metrics().to_json()}});
    }

    void close_streams() {
        std::shared_lock lock(mu);
        for (auto& [_, ls] : sessions) ls->close_all();
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error(Errc::io, host + ":" + std::to_string(port), "cannot bind");
    impl_->bound_port = bound;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port)) throw Error(Errc::io, host + ":" + std::to_string(port), "cannot bind");
    impl_->bound_port = port;
    impl_->server.listen_after_bind();
}

void Service::stop() {
    if (!impl_) return;
    impl_->stopping = true;
    impl_->close_streams();
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const noexcept { return impl_->bound_port; }

std::shared_ptr<Session> Service::find_session(const std::string& id) const {
    auto ls = impl_->live(id);
    return ls ? ls->session : nullptr;
}

}  // namespace affectloop

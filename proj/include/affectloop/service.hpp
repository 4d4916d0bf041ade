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

// REST + server-sent-events front end for live sessions.
//
//   POST /sessions                  create (201, status calibrating)
//   POST /sessions/{id}/ingest      NDJSON samples (202, per-line report)
//   POST /sessions/{id}/go-live     200, or 409 with per-student shortfall
//   GET  /sessions/{id}/state       collective state, suggestion, metrics
//   POST /sessions/{id}/action      {action, source: applied|override|infeasible}
//   POST /sessions/{id}/intervention {kind: pace|content, student_id?}
//   GET  /sessions/{id}/stream      text/event-stream: state, suggestion, heartbeat
//   POST /sessions/{id}/end         200, flushes the session to storage

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "affectloop/engine.hpp"
#include "affectloop/mdp.hpp"
#include "affectloop/svr.hpp"

namespace affectloop {

struct ServiceOptions {
    std::filesystem::path storage_root;
    std::string model_id = "default";
    std::shared_ptr<const VaRegressor> model;
    std::string mdp_config_id = "default";
    std::shared_ptr<const Policy> policy;
    EngineConfig engine;
    std::optional<std::string> bearer_token;
    std::chrono::milliseconds heartbeat{10'000};
};

class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();
    int port() const noexcept;

    /// The in-memory session, or null.
    std::shared_ptr<Session> find_session(const std::string& id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code (400, 404, 409 or 500).
int http_status_for(const class Error& e);

}  // namespace affectloop

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

#include "affectloop/error.hpp"

namespace affectloop {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::parse: return "parse";
        case Errc::schema: return "schema";
        case Errc::range: return "range";
        case Errc::ordering: return "ordering";
        case Errc::session: return "session";
        case Errc::insufficient_data: return "insufficient_data";
        case Errc::warm_up: return "warm_up";
        case Errc::calibration_required: return "calibration_required";
        case Errc::precondition: return "precondition";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::not_found: return "not_found";
        case Errc::corrupt: return "corrupt";
        case Errc::io: return "io";
        case Errc::numeric: return "numeric";
        case Errc::periodicity: return "periodicity";
        case Errc::reducibility: return "reducibility";
        case Errc::conflict: return "conflict";
        case Errc::infeasible: return "infeasible";
        case Errc::untrained: return "untrained";
    }
    return "unknown";
}

namespace {
std::string compose(Errc code, const std::string& subject, const std::string& message) {
    std::string out(errc_name(code));
    out += " error";
    if (!subject.empty()) {
        out += " [";
        out += subject;
        out += "]";
    }
    out += ": ";
    out += message;
    return out;
}
}  // namespace

Error::Error(Errc code, std::string subject, const std::string& message)
    : std::runtime_error(compose(code, subject, message)), code_(code), subject_(std::move(subject)), detail_(message) {}

}  // namespace affectloop

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

#include <stdexcept>
#include <string>
#include <string_view>

namespace affectloop {

enum class Errc {
    parse,
    schema,
    range,
    ordering,
    session,
    insufficient_data,
    warm_up,
    calibration_required,
    precondition,
    invalid_argument,
    not_found,
    corrupt,
    io,
    numeric,
    periodicity,
    reducibility,
    conflict,
    infeasible,
    untrained,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception. `subject()` names the offending field, channel,
/// file or student when there is one.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string subject, const std::string& message);

    Errc code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }
    /// The message without the code and subject prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string subject_;
    std::string detail_;
};

}  // namespace affectloop

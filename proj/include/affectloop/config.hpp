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

#include <filesystem>

#include "affectloop/mdp.hpp"
#include "json.hpp"

namespace affectloop {

/// Root holding config/ and presets/. AFFECTLOOP_DATA_DIR in the environment
/// overrides the location baked in at build time.
std::filesystem::path data_dir();

std::filesystem::path default_mdp_config_path();

/// Throws Error(io) when unreadable and Error(parse) naming the file otherwise.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j, int indent = 2);

MdpModel load_mdp_model(const std::filesystem::path& path);

}  // namespace affectloop

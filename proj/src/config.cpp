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

#include "affectloop/config.hpp"

#include <cstdlib>
#include <fstream>

#include "affectloop/error.hpp"

namespace affectloop {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("AFFECTLOOP_DATA_DIR"); env && *env) return env;
#ifdef AFFECTLOOP_DATA_DIR
    return AFFECTLOOP_DATA_DIR;
#else
    return std::filesystem::current_path();
#endif
}

std::filesystem::path default_mdp_config_path() { return data_dir() / "config" / "mdp_default.json"; }

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, path.string(), "cannot open file");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::parse, path.string(), e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j, int indent) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, path.string(), "cannot write file");
    out << j.dump(indent) << '\n';
    if (!out) throw Error(Errc::io, path.string(), "write failed");
}

MdpModel load_mdp_model(const std::filesystem::path& path) {
    const auto j = read_json_file(path);
    try {
        return MdpModel::from_json(j);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.subject(), e.detail());
    }
}

}  // namespace affectloop

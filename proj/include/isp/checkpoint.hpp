// Copyright (c) 2026 The twostage-isp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>

#include "json.hpp"

#include "isp/tensor.hpp"

// Parameter checkpoints: `<prefix>.json` lists every tensor's name, shape and
// byte offset into `<prefix>.bin`, a blob of little-endian float32 values.
namespace isp::ad {

struct Checkpoint {
    ParamSet<float> params;
    nlohmann::json metadata; // free-form, stored under "metadata" in the manifest
};

void save_checkpoint(const std::filesystem::path& prefix, const ParamSet<float>& params,
                     const nlohmann::json& metadata = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& prefix);

bool checkpoint_exists(const std::filesystem::path& prefix);

} // namespace isp::ad

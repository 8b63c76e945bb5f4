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

#include <set>
#include <string>

#include "json.hpp"

#include "isp/error.hpp"

namespace isp {

// Reads fields of a JSON object into typed values. Type errors and unknown
// keys raise ValidationError with the dotted field path.
class JsonFields {
public:
    JsonFields(const nlohmann::json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
        if (!obj_.is_object()) {
            throw ValidationError(context_ + ": expected a JSON object");
        }
    }

    std::string path(const std::string& key) const { return context_.empty() ? key : context_ + "." + key; }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const nlohmann::json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    template <typename V>
    void get(const std::string& key, V& out, bool required = false) {
        seen_.insert(key);
        if (!obj_.contains(key)) {
            if (required) throw ValidationError("missing required field '" + path(key) + "'");
            return;
        }
        try {
            out = obj_.at(key).get<V>();
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("field '" + path(key) + "' has the wrong type");
        }
    }

    // Rejects keys that were never read.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ValidationError("unknown field '" + path(it.key()) + "'");
            }
        }
    }

private:
    const nlohmann::json& obj_;
    std::string context_;
    std::set<std::string> seen_;
};

} // namespace isp

/*******************************************************************************
* Copyright 2026 The medperturb authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace medperturb {

/// Raised when user-supplied inputs (manifests, record files, CLI arguments)
/// fail validation. The CLI maps this to exit code 1, everything else to 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-fatal diagnostics accumulated during an operation (clamped kernels,
/// missing predictions, ...). Callers that pass nullptr simply drop them.
struct Warnings {
    std::vector<std::string> messages;

    void add(std::string msg) { messages.push_back(std::move(msg)); }
    bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string msg) {
    if (sink) sink->add(std::move(msg));
}

inline double clamp01(double v) {
    return std::clamp(v, 0.0, 1.0);
}

} // namespace medperturb

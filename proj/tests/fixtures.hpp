// Copyright 2026 The floqlin Authors
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

#include <cmath>

#include "floqlin/floqlin.hpp"

namespace floqlin::fixtures {

inline const double kDelta = std::sqrt(0.4);
inline const double kDriveF = std::sqrt(0.1);

inline ModelParams free_params(double gamma = 0.1) { return {0.0, kDelta, gamma}; }
inline ModelParams driven_params(double gamma = 0.1) { return {kDriveF, kDelta, gamma}; }

// Cycles and Floquet systems are expensive enough to build once per binary.
inline const FloquetSystem& free_system() {
    static const FloquetSystem sys = build_floquet(find_limit_cycle(free_params()));
    return sys;
}

inline const FloquetSystem& driven_system() {
    static const FloquetSystem sys = build_floquet(find_limit_cycle(driven_params()));
    return sys;
}

}  // namespace floqlin::fixtures

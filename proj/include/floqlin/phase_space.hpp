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

// Phase-space grids shared by the linearized mixture and the exact oracle.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "floqlin/errors.hpp"

namespace floqlin {

using Real2 = std::array<double, 2>;
using Real2x2 = std::array<std::array<double, 2>, 2>;

struct GridSpec {
    double x_min = -6.0, x_max = 6.0;
    double p_min = -6.0, p_max = 6.0;
    std::size_t nx = 201, ny = 201;
    bool auto_extend = true;  // widen to cover every snapshot mean ± 5σ
};

struct WignerGrid {
    double x_min = 0.0, x_max = 0.0, p_min = 0.0, p_max = 0.0;
    std::size_t nx = 0, ny = 0;
    std::vector<double> values;  // row-major, values[j * nx + i] at (x_i, p_j)

    [[nodiscard]] double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx - 1); }
    [[nodiscard]] double dp() const noexcept { return (p_max - p_min) / static_cast<double>(ny - 1); }
    [[nodiscard]] double x(std::size_t i) const noexcept { return x_min + dx() * static_cast<double>(i); }
    [[nodiscard]] double p(std::size_t j) const noexcept { return p_min + dp() * static_cast<double>(j); }
    [[nodiscard]] double cell_area() const noexcept { return dx() * dp(); }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values.at(j * nx + i); }
    [[nodiscard]] double mass() const noexcept {
        double s = 0.0;
        for (double v : values) s += v;
        return s * cell_area();
    }
    [[nodiscard]] bool finite() const noexcept {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
    [[nodiscard]] bool same_layout(const WignerGrid& o) const noexcept {
        return nx == o.nx && ny == o.ny && x_min == o.x_min && x_max == o.x_max && p_min == o.p_min &&
               p_max == o.p_max;
    }
};

inline WignerGrid make_grid(const GridSpec& spec) {
    if (spec.nx < 2 || spec.ny < 2 || !(spec.x_max > spec.x_min) || !(spec.p_max > spec.p_min) ||
        !std::isfinite(spec.x_min) || !std::isfinite(spec.x_max) || !std::isfinite(spec.p_min) ||
        !std::isfinite(spec.p_max)) {
        throw PreconditionError("fluctuations", "invalid grid specification");
    }
    WignerGrid g;
    g.x_min = spec.x_min;
    g.x_max = spec.x_max;
    g.p_min = spec.p_min;
    g.p_max = spec.p_max;
    g.nx = spec.nx;
    g.ny = spec.ny;
    g.values.assign(spec.nx * spec.ny, 0.0);
    return g;
}

// Mean and covariance of a grid treated as a distribution.
struct GridMoments {
    double mass = 0.0;
    Real2 mean{};
    Real2x2 covariance{};
};

inline GridMoments grid_moments(const WignerGrid& g) {
    GridMoments m;
    double s = 0.0, sx = 0.0, sp = 0.0, sxx = 0.0, spp = 0.0, sxp = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        const double p = g.p(j);
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double x = g.x(i);
            const double w = g.values[j * g.nx + i];
            s += w;
            sx += w * x;
            sp += w * p;
            sxx += w * x * x;
            spp += w * p * p;
            sxp += w * x * p;
        }
    }
    m.mass = s * g.cell_area();
    m.mean = {sx / s, sp / s};
    m.covariance[0][0] = sxx / s - m.mean[0] * m.mean[0];
    m.covariance[1][1] = spp / s - m.mean[1] * m.mean[1];
    m.covariance[0][1] = m.covariance[1][0] = sxp / s - m.mean[0] * m.mean[1];
    return m;
}

}  // namespace floqlin

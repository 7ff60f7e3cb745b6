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

// Linearized fluctuations around a limit cycle: phase diffusion, the periodic
// variance kernel of the damped mode, Gaussian snapshots and the mixture
// Wigner function.
//
// Phase-space convention shared with the Fock oracle: x = a + a†,
// p = −i(a − a†), vacuum covariance = identity, ∫W dx dp = 1.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "floqlin/errors.hpp"
#include "floqlin/floquet.hpp"
#include "floqlin/numerics.hpp"
#include "floqlin/parallel.hpp"
#include "floqlin/phase_space.hpp"

namespace floqlin {

inline Complex2Matrix diffusion_matrix(cplx beta_bar) noexcept {
    return {{-beta_bar * beta_bar, cplx(2.0), cplx(2.0), -std::conj(beta_bar * beta_bar)}};
}

struct GaussianSnapshot {
    double theta = 0.0;
    Real2 mean{};
    Real2x2 covariance{};

    [[nodiscard]] double det() const noexcept {
        return covariance[0][0] * covariance[1][1] - covariance[0][1] * covariance[1][0];
    }
    // Ascending eigenvalues of the covariance.
    [[nodiscard]] Real2 eigenvalues() const noexcept {
        const double tr = covariance[0][0] + covariance[1][1];
        const double half = 0.5 * (covariance[0][0] - covariance[1][1]);
        const double r = std::hypot(half, covariance[0][1]);
        return {0.5 * tr - r, 0.5 * tr + r};
    }
};

struct ThetaDiffusion {
    std::vector<double> tau;
    std::vector<double> variance;
    double slope = 0.0;  // least-squares fit over period boundaries
};

namespace detail {

inline double real_checked(cplx v, const char* what, double scale = 1.0) {
    if (std::abs(v.imag()) > 1e-8 * std::max(1.0, scale)) {
        throw InconsistentModesError("fluctuations", std::string(what) + " has imaginary part " +
                                                         std::to_string(v.imag()));
    }
    return v.real();
}

// q†N q* on the cycle grid, verified to be real and non-negative.
inline std::vector<double> noise_kernel(const FloquetSystem& sys, const std::vector<Vec2>& q, const char* what) {
    const std::size_t n = sys.ngrid();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 qs = conj(q[k]);
        const cplx v = dotu(qs, diffusion_matrix(sys.cycle.samples[k]) * qs);
        const double r = real_checked(v, what, std::abs(v));
        if (r < -1e-12) throw InconsistentModesError("fluctuations", std::string(what) + " is negative");
        out[k] = std::max(r, 0.0);
    }
    return out;
}

}  // namespace detail

// Kernel of the phase diffusion, q0†N q0*, on the cycle grid.
inline std::vector<double> theta_kernel(const FloquetSystem& sys) {
    return detail::noise_kernel(sys, sys.q0, "phase diffusion kernel");
}

// Kernel driving the damped mode, q1†N q1*, on the cycle grid.
inline std::vector<double> c1_kernel_source(const FloquetSystem& sys) {
    return detail::noise_kernel(sys, sys.q1, "damped-mode noise kernel");
}

namespace detail {

// ∫_0^tau of a T-periodic grid function (trapezoid per cell, linear inside a cell).
inline double periodic_integral(const std::vector<double>& k, double period, double tau) {
    const std::size_t n = k.size();
    const double h = period / static_cast<double>(n);
    double cell_sum = 0.0;
    for (double v : k) cell_sum += v;
    const double per_period = cell_sum * h;
    const double whole = std::floor(tau / period);
    double rest = tau - whole * period;
    double acc = whole * per_period;
    std::size_t cell = 0;
    while (rest >= h && cell < n) {
        acc += 0.5 * h * (k[cell] + k[(cell + 1) % n]);
        rest -= h;
        ++cell;
    }
    if (rest > 0.0 && cell < n) {
        const double a = k[cell];
        const double b = k[(cell + 1) % n];
        acc += rest * (a + 0.5 * (b - a) * rest / h);
    }
    return acc;
}

}  // namespace detail

// Var[θ(τ) − θ(0)] from the phase diffusion kernel.
inline double theta_variance(const FloquetSystem& sys, double gamma, double tau) {
    if (!(tau >= 0.0) || !(gamma > 0.0)) {
        throw PreconditionError("fluctuations", "theta_variance requires tau >= 0 and gamma > 0");
    }
    return gamma * detail::periodic_integral(theta_kernel(sys), sys.period(), tau);
}

inline ThetaDiffusion theta_diffusion(const FloquetSystem& sys, double gamma, std::size_t periods = 10,
                                      std::size_t samples_per_period = 64) {
    if (!(gamma > 0.0) || periods < 2 || samples_per_period < 1) {
        throw PreconditionError("fluctuations", "theta_diffusion: need gamma > 0 and at least two periods");
    }
    const std::vector<double> k = theta_kernel(sys);
    const double T = sys.period();
    ThetaDiffusion out;
    const std::size_t total = periods * samples_per_period;
    out.tau.resize(total + 1);
    out.variance.resize(total + 1);
    for (std::size_t i = 0; i <= total; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(samples_per_period);
        out.tau[i] = t;
        out.variance[i] = gamma * detail::periodic_integral(k, T, t);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t m = 0; m <= periods; ++m) {
        const double x = out.tau[m * samples_per_period];
        const double y = out.variance[m * samples_per_period];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double cnt = static_cast<double>(periods + 1);
    out.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return out;
}

struct CKernelOptions {
    std::size_t max_periods = 200;
    double tol = 1e-10;
};

// Periodic steady solution of Σ' = 2μ1 Σ + g(τ), g = q1†N q1*. Returned values
// are γ-independent; the damped-mode variance is γ C(τ).
inline std::vector<double> c_kernel(const FloquetSystem& sys, const CKernelOptions& opts = {}) {
    const cplx mu1 = sys.eigen.mu1;
    if (!(mu1.real() < 0.0)) throw PreconditionError("fluctuations", "c_kernel requires Re mu1 < 0");
    const std::vector<double> g = c1_kernel_source(sys);
    const std::size_t n = g.size();
    const double h = sys.period() / static_cast<double>(n);
    // Exact propagation with g linear inside each cell.
    const cplx a = 2.0 * mu1;
    const cplx e = std::exp(a * h);
    const cplx phi1 = (e - 1.0) / a;
    const cplx phi2 = (e - 1.0 - a * h) / (a * a * h);

    std::vector<cplx> cur(n), prev(n);
    cplx s = 0.0;
    for (std::size_t period = 0; period < opts.max_periods; ++period) {
        for (std::size_t k = 0; k < n; ++k) {
            cur[k] = s;
            const double g0 = g[k];
            const double g1 = g[(k + 1) % n];
            s = e * s + g0 * phi1 + (g1 - g0) * phi2;
        }
        if (period > 0) {
            double diff = 0.0;
            for (std::size_t k = 0; k < n; ++k) diff = std::max(diff, std::abs(cur[k] - prev[k]));
            if (diff < opts.tol) {
                std::vector<double> out(n);
                for (std::size_t k = 0; k < n; ++k) {
                    out[k] = detail::real_checked(cur[k], "C kernel", std::abs(cur[k]));
                }
                return out;
            }
        }
        prev.swap(cur);
    }
    throw ConvergenceError("fluctuations", "C kernel did not converge within " +
                                               std::to_string(opts.max_periods) + " periods");
}

// Snapshot with a precomputed C kernel.
inline GaussianSnapshot gaussian_moments(const FloquetSystem& sys, const std::vector<double>& C, double gamma,
                                         double theta) {
    const double T = sys.period();
    if (!(gamma > 0.0)) throw PreconditionError("fluctuations", "gaussian_moments requires gamma > 0");
    if (!(theta >= 0.0 && theta < T)) throw PreconditionError("fluctuations", "theta must lie in [0, T)");
    if (C.size() != sys.ngrid()) throw DimensionMismatchError("fluctuations", "C kernel size mismatch");

    const cplx beta = periodic_interp<cplx>(sys.cycle.samples, T, theta);
    const Vec2 p1 = periodic_interp<Vec2>(sys.p1, T, theta);
    const double c = periodic_interp<double>(C, T, theta);

    GaussianSnapshot s;
    s.theta = theta;
    const double scale = 1.0 / std::sqrt(gamma);
    s.mean = {2.0 * beta.real() * scale, 2.0 * beta.imag() * scale};
    // U p1 with U = [[1,1],[−i,i]]; real when p1 is conjugate-symmetric.
    const cplx u0 = p1.a + p1.b;
    const cplx u1 = -kI * p1.a + kI * p1.b;
    const double ref = std::abs(u0) + std::abs(u1);
    const std::array<cplx, 2> u{u0, u1};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const cplx excess = c * u[i] * u[j];
            s.covariance[i][j] = (i == j ? 1.0 : 0.0) + detail::real_checked(excess, "covariance", ref * ref);
        }
    }
    s.covariance[0][1] = s.covariance[1][0] = 0.5 * (s.covariance[0][1] + s.covariance[1][0]);
    return s;
}

inline GaussianSnapshot gaussian_moments(const FloquetSystem& sys, double gamma, double theta) {
    return gaussian_moments(sys, c_kernel(sys), gamma, theta);
}

namespace detail {

struct GaussianEval {
    Real2 mean{};
    Real2x2 inv{};
    double norm = 0.0;
};

inline GaussianEval prepare(const GaussianSnapshot& s) {
    const double det = s.det();
    if (!(det > 1e-12)) throw DegenerateCovarianceError("fluctuations", "singular snapshot covariance");
    GaussianEval g;
    g.mean = s.mean;
    g.inv[0][0] = s.covariance[1][1] / det;
    g.inv[1][1] = s.covariance[0][0] / det;
    g.inv[0][1] = g.inv[1][0] = -s.covariance[0][1] / det;
    g.norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    return g;
}

}  // namespace detail

inline std::vector<GaussianSnapshot> mixture_snapshots(const FloquetSystem& sys, double gamma,
                                                       std::size_t n_theta) {
    if (n_theta < 64) throw PreconditionError("fluctuations", "mixture needs n_theta >= 64");
    const std::vector<double> C = c_kernel(sys);
    std::vector<GaussianSnapshot> snaps(n_theta);
    const double T = sys.period();
    for (std::size_t k = 0; k < n_theta; ++k) {
        const double theta = T * (static_cast<double>(k) + 0.5) / static_cast<double>(n_theta);
        snaps[k] = gaussian_moments(sys, C, gamma, theta);
    }
    return snaps;
}

// Widen a grid spec so it covers every snapshot mean ± 5σ.
inline GridSpec cover_snapshots(GridSpec spec, const std::vector<GaussianSnapshot>& snaps) {
    for (const auto& s : snaps) {
        const double sx = 5.0 * std::sqrt(s.covariance[0][0]);
        const double sp = 5.0 * std::sqrt(s.covariance[1][1]);
        spec.x_min = std::min(spec.x_min, s.mean[0] - sx);
        spec.x_max = std::max(spec.x_max, s.mean[0] + sx);
        spec.p_min = std::min(spec.p_min, s.mean[1] - sp);
        spec.p_max = std::max(spec.p_max, s.mean[1] + sp);
    }
    return spec;
}

// Balanced Gaussian mixture over the cycle offset, midpoint rule in θ.
inline WignerGrid mixture_wigner(const FloquetSystem& sys, double gamma, GridSpec spec, std::size_t n_theta = 256) {
    const std::vector<GaussianSnapshot> snaps = mixture_snapshots(sys, gamma, n_theta);
    if (spec.auto_extend) spec = cover_snapshots(spec, snaps);
    WignerGrid grid = make_grid(spec);
    std::vector<detail::GaussianEval> evals;
    evals.reserve(snaps.size());
    for (const auto& s : snaps) evals.push_back(detail::prepare(s));
    const double weight = 1.0 / static_cast<double>(n_theta);
    parallel_for(grid.ny, [&](std::size_t j) {
        const double p = grid.p(j);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i);
            double acc = 0.0;
            for (const auto& g : evals) {
                const double dx = x - g.mean[0];
                const double dp = p - g.mean[1];
                const double q = g.inv[0][0] * dx * dx + 2.0 * g.inv[0][1] * dx * dp + g.inv[1][1] * dp * dp;
                acc += g.norm * std::exp(-0.5 * q);
            }
            grid.values[j * grid.nx + i] = acc * weight;
        }
    });
    return grid;
}

struct WignerComparison {
    double l1 = 0.0;           // Σ|W_a − W_b| dA
    double l1_relative = 0.0;  // l1 / mass of the reference grid
    double sup_norm = 0.0;
    Real2 exact_argmax{};      // location of the reference maximum
    double argmax_cells_from_cycle = 0.0;  // distance to the classical curve, in grid cells
};

// Distances between a linearized grid and a reference grid on the same
// layout; the reference maximum is located relative to the curve 2β̄/√γ.
inline WignerComparison compare_wigner(const WignerGrid& linearized, const WignerGrid& reference,
                                       const FloquetSystem& sys, double gamma) {
    if (!linearized.same_layout(reference)) {
        throw DimensionMismatchError("fluctuations", "compare_wigner needs grids on the same layout");
    }
    WignerComparison c;
    std::size_t best = 0;
    for (std::size_t i = 0; i < reference.values.size(); ++i) {
        const double d = std::abs(linearized.values[i] - reference.values[i]);
        c.l1 += d;
        c.sup_norm = std::max(c.sup_norm, d);
        if (reference.values[i] > reference.values[best]) best = i;
    }
    c.l1 *= reference.cell_area();
    c.l1_relative = c.l1 / reference.mass();
    c.exact_argmax = {reference.x(best % reference.nx), reference.p(best / reference.nx)};
    const double scale = 2.0 / std::sqrt(gamma);
    double dmin = std::numeric_limits<double>::infinity();
    const auto& pts = sys.cycle.samples;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        // Distance to the polygon edge from sample k to k+1.
        const Real2 a{scale * pts[k].real(), scale * pts[k].imag()};
        const cplx nb = pts[(k + 1) % pts.size()];
        const Real2 b{scale * nb.real(), scale * nb.imag()};
        const double ex = b[0] - a[0], ey = b[1] - a[1];
        const double len2 = ex * ex + ey * ey;
        double t = len2 > 0.0 ? ((c.exact_argmax[0] - a[0]) * ex + (c.exact_argmax[1] - a[1]) * ey) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        dmin = std::min(dmin, std::hypot(c.exact_argmax[0] - a[0] - t * ex, c.exact_argmax[1] - a[1] - t * ey));
    }
    c.argmax_cells_from_cycle = dmin / std::max(reference.dx(), reference.dp());
    return c;
}

}  // namespace floqlin

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

// classical.hpp: Classical driven Van der Pol dynamics. Stationary states,
// their stability and phase-diagram classification, and numerical limit
// cycles found by Poincaré-section period detection plus Newton shooting.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "floqlin/errors.hpp"
#include "floqlin/numerics.hpp"
#include "floqlin/parallel.hpp"

namespace floqlin {

// Drive amplitude F, detuning Delta and nonlinear-loss rate gamma, all in
// units of the linear pump rate. gamma only matters beyond the classical limit.
struct ModelParams {
    double F = 0.0;
    double Delta = 0.0;
    double gamma = 0.1;

    void validate() const {
        if (!(F >= 0.0) || !std::isfinite(F)) throw PreconditionError("classical", "F must be finite and >= 0");
        if (!std::isfinite(Delta)) throw PreconditionError("classical", "Delta must be finite");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw PreconditionError("classical", "gamma must be > 0");
    }
};

// dβ/dτ = F + (1 + iΔ − |β|²) β
inline cplx drift(cplx beta, const ModelParams& p) noexcept {
    return p.F + (cplx(1.0 - std::norm(beta), p.Delta)) * beta;
}

// ------------------------------------------------------ stationary states

// Non-negative real roots of F² = (Δ²+1) I − 2 I² + I³, sorted, multiplicity kept.
inline std::vector<double> stationary_intensities(double F, double Delta) {
    if (!(F >= 0.0)) throw PreconditionError("classical", "stationary_intensities: F must be >= 0");
    const double d2 = Delta * Delta;
    const double f2 = F * F;
    auto poly = [&](double x) { return ((x - 2.0) * x + (d2 + 1.0)) * x - f2; };
    auto dpoly = [&](double x) { return (3.0 * x - 4.0) * x + (d2 + 1.0); };
    // Depressed cubic t³ + p t + q with I = t + 2/3.
    const double p = d2 + 1.0 - 4.0 / 3.0;
    const double q = -16.0 / 27.0 + 2.0 * (d2 + 1.0) / 3.0 - f2;
    const double disc = 4.0 * p * p * p + 27.0 * q * q;

    std::vector<double> roots;
    bool multiple = false;
    if (std::abs(disc) < 1e-12) {
        multiple = true;
        if (std::abs(p) < 1e-12) {
            roots = {0.0, 0.0, 0.0};
        } else {
            const double dbl = -1.5 * q / p;
            roots = {3.0 * q / p, dbl, dbl};
        }
    } else if (disc < 0.0) {
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(1.5 * q / p * std::sqrt(-3.0 / p), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
    } else {
        const double s = std::sqrt(disc / 108.0);
        roots = {std::cbrt(-0.5 * q + s) + std::cbrt(-0.5 * q - s)};
    }
    for (double& t : roots) {
        double x = t + 2.0 / 3.0;
        // Newton polish on simple roots only; a double root has a vanishing slope.
        if (!multiple) {
            for (int it = 0; it < 4; ++it) {
                const double d = dpoly(x);
                if (std::abs(d) < 1e-8) break;
                x -= poly(x) / d;
            }
        }
        t = (std::abs(x) < 1e-14) ? 0.0 : x;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// λ± = 1 − 2I ± √(I² − Δ²)
inline std::pair<cplx, cplx> stability_eigenvalues(double I, double Delta) {
    if (!(I >= 0.0)) throw PreconditionError("classical", "stability_eigenvalues: I must be >= 0");
    const cplx root = std::sqrt(cplx(I * I - Delta * Delta, 0.0));
    return {1.0 - 2.0 * I + root, 1.0 - 2.0 * I - root};
}

// Coefficients of the phase-fluctuation oscillator δφ'' + Γ δφ' + Ω² δφ = 0.
struct PhaseDamping {
    double Gamma = 0.0;
    double Omega2 = 0.0;
};

inline PhaseDamping phase_damping(double I, double Delta) noexcept {
    const double g = 2.0 * I - 1.0;
    return {2.0 * g, Delta * Delta + g * g - I * I};
}

struct TurningPoints {
    double I_plus = 0.0;
    double I_minus = 0.0;
    double F2_plus = 0.0;
    double F2_minus = 0.0;
};

// Folds of the S-shaped I(F²) curve; they exist only for Δ² ≤ 1/3.
inline std::optional<TurningPoints> turning_points(double Delta) {
    double arg = 1.0 - 3.0 * Delta * Delta;
    if (arg < -1e-12) return std::nullopt;
    // A few ulps of 1 come from rounding Δ² itself; treat them as coalescence.
    if (arg < 8.0 * std::numeric_limits<double>::epsilon()) arg = 0.0;
    const double s = std::sqrt(arg);
    const double d2 = Delta * Delta;
    TurningPoints tp;
    tp.I_plus = (2.0 + s) / 3.0;
    tp.I_minus = (2.0 - s) / 3.0;
    tp.F2_plus = 2.0 / 27.0 * (2.0 + s) * (1.0 + 3.0 * d2 - s);
    tp.F2_minus = 2.0 / 27.0 * (2.0 - s) * (1.0 + 3.0 * d2 + s);
    return tp;
}

enum class DampingClass { Overdamped, Underdamped };

enum class RegionLabel { StableOverdamped, StableUnderdamped, UnstableStatic, UnstableHopfSide };

inline std::string_view to_string(RegionLabel label) noexcept {
    switch (label) {
        case RegionLabel::StableOverdamped: return "stable-overdamped";
        case RegionLabel::StableUnderdamped: return "stable-underdamped";
        case RegionLabel::UnstableStatic: return "unstable-static";
        case RegionLabel::UnstableHopfSide: return "unstable-hopf-side";
    }
    return "unknown";
}

// Region of the (I, Δ²) plane plus signed distances (in I) to the TP±, HB and
// UP curves. Distances to absent turning points are NaN.
struct PhaseRegion {
    RegionLabel label = RegionLabel::StableOverdamped;
    double to_tp_plus = std::numeric_limits<double>::quiet_NaN();
    double to_tp_minus = std::numeric_limits<double>::quiet_NaN();
    double to_hb = 0.0;
    double to_up = 0.0;
};

inline PhaseRegion classify(double I, double Delta) {
    const auto [lp, lm] = stability_eigenvalues(I, Delta);
    const bool stable = std::max(lp.real(), lm.real()) < 0.0;
    const bool complex_pair = I * I < Delta * Delta;
    PhaseRegion r;
    if (stable) {
        r.label = complex_pair ? RegionLabel::StableUnderdamped : RegionLabel::StableOverdamped;
    } else {
        r.label = complex_pair ? RegionLabel::UnstableHopfSide : RegionLabel::UnstableStatic;
    }
    if (const auto tp = turning_points(Delta)) {
        r.to_tp_plus = I - tp->I_plus;
        r.to_tp_minus = I - tp->I_minus;
    }
    r.to_hb = I - 0.5;
    r.to_up = I - std::abs(Delta);
    return r;
}

struct StationaryState {
    double I = 0.0;
    double phi = 0.0;  // in [0, 2π)
    cplx lambda_plus{};
    cplx lambda_minus{};
    bool stable = false;
    DampingClass damping = DampingClass::Overdamped;

    [[nodiscard]] cplx amplitude() const { return std::polar(std::sqrt(I), phi); }
};

// All stationary amplitudes β̄ = √I e^{iφ} for the given drive. The phase is
// the one that zeroes the drift, β̄ = −F/(1 + iΔ − I).
inline std::vector<StationaryState> stationary_states(const ModelParams& p) {
    std::vector<StationaryState> out;
    for (double I : stationary_intensities(p.F, p.Delta)) {
        StationaryState s;
        s.I = I;
        const cplx denom(1.0 - I, p.Delta);
        if (p.F > 0.0 && std::abs(denom) > 0.0) {
            double phi = std::arg(-p.F / denom);
            if (phi < 0.0) phi += 2.0 * std::numbers::pi;
            s.phi = phi;
        }
        std::tie(s.lambda_plus, s.lambda_minus) = stability_eigenvalues(I, p.Delta);
        s.stable = std::max(s.lambda_plus.real(), s.lambda_minus.real()) < 0.0;
        s.damping = (I * I < p.Delta * p.Delta) ? DampingClass::Underdamped : DampingClass::Overdamped;
        out.push_back(s);
    }
    return out;
}

// ------------------------------------------------------------ limit cycles

struct CycleOptions {
    double transient_time = 50.0;
    std::size_t ngrid = 1024;
    double dt = 5e-3;              // step for transient and period search
    double search_time = 1000.0;   // budget for period detection after the transient
    double closure_tol = 1e-10;
    double amplitude_tol = 1e-8;
    cplx initial{1e-3, 0.0};
    int max_newton = 60;
};

struct LimitCycle {
    ModelParams params;
    double period = 0.0;
    std::vector<cplx> samples;      // β̄(τ_k), τ_k = k T / N
    std::vector<cplx> derivatives;  // ∂τ β̄(τ_k)
    double closure_residual = 0.0;
    double mean_intensity = 0.0;
    double amplitude = 0.0;         // max_k |β̄(τ_k) − ⟨β̄⟩|
    int newton_iterations = 0;

    [[nodiscard]] std::size_t ngrid() const noexcept { return samples.size(); }
    [[nodiscard]] double step() const noexcept { return period / static_cast<double>(samples.size()); }
    [[nodiscard]] double tau(std::size_t k) const noexcept { return step() * static_cast<double>(k); }
};

namespace detail {

// Classical state augmented with the real-linear variational flow of the two
// real directions δβ = 1 and δβ = i.
inline CState<3> classical_variational_rhs(const ModelParams& p, const CState<3>& y) {
    const cplx b = y[0];
    const cplx l11(1.0 - 2.0 * std::norm(b), p.Delta);
    const cplx l12 = -b * b;
    return {drift(b, p), l11 * y[1] + l12 * std::conj(y[1]), l11 * y[2] + l12 * std::conj(y[2])};
}

inline cplx classical_step(cplx beta, const ModelParams& p, double h) {
    const auto rhs = [&](double, const CState<1>& y) { return CState<1>{drift(y[0], p)}; };
    return rk4_step<1>(rhs, 0.0, CState<1>{beta}, h)[0];
}

// Cubic Hermite value at fraction u of a step of length h.
inline cplx hermite(cplx y0, cplx d0, cplx y1, cplx d1, double h, double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0 + (-2 * u3 + 3 * u2) * y1 +
           (u3 - u2) * h * d1;
}

// Solve a real 3x3 system by Gaussian elimination with partial pivoting.
inline std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> a) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        if (a[c][c] == 0.0) throw PeriodDetectionError("classical", "singular shooting Jacobian");
        for (int r = c + 1; r < 3; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::array<double, 3> x{};
    for (int r = 2; r >= 0; --r) {
        double s = a[r][3];
        for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

struct ShootingResult {
    cplx end;
    cplx jac_x;  // ∂β(T)/∂x0
    cplx jac_y;  // ∂β(T)/∂y0
};

inline ShootingResult shoot(cplx beta0, double period, std::size_t n, const ModelParams& p) {
    const double h = period / static_cast<double>(n);
    const auto rhs = [&](double, const CState<3>& y) { return classical_variational_rhs(p, y); };
    CState<3> y{beta0, cplx(1.0, 0.0), cplx(0.0, 1.0)};
    for (std::size_t k = 0; k < n; ++k) y = rk4_step<3>(rhs, 0.0, y, h);
    if (!all_finite(y)) throw DivergenceError("classical", "shooting integration diverged");
    return {y[0], y[1], y[2]};
}

}  // namespace detail

// Locate the attracting limit cycle reached from opts.initial.
inline LimitCycle find_limit_cycle(const ModelParams& params, const CycleOptions& opts = {}) {
    params.validate();
    if (opts.ngrid < 8) throw PreconditionError("classical", "find_limit_cycle: ngrid too small");
    const double h = opts.dt;

    // Transient.
    cplx beta = opts.initial;
    const auto transient_steps = static_cast<std::size_t>(std::ceil(opts.transient_time / h));
    for (std::size_t k = 0; k < transient_steps; ++k) {
        beta = detail::classical_step(beta, params, h);
        if (!std::isfinite(beta.real()) || !std::isfinite(beta.imag())) {
            throw DivergenceError("classical", "classical transient diverged");
        }
    }

    // Period detection on the section through β_ref normal to the flow.
    const cplx ref = beta;
    const cplx fref = drift(ref, params);
    auto section = [&](cplx b) { return (b - ref).real() * fref.real() + (b - ref).imag() * fref.imag(); };

    struct Crossing {
        double t;
        cplx beta;
        double amplitude;
    };
    std::vector<Crossing> crossings;
    double t = 0.0;
    double rev_amplitude = 0.0;
    double total_amplitude = 0.0;
    const auto search_steps = static_cast<std::size_t>(std::ceil(opts.search_time / h));
    bool accepted = false;
    double period_guess = 0.0;
    cplx start_guess = ref;
    for (std::size_t k = 0; k < search_steps; ++k) {
        const cplx prev = beta;
        const double s_prev = section(prev);
        beta = detail::classical_step(beta, params, h);
        t += h;
        const double dist = std::abs(beta - ref);
        total_amplitude = std::max(total_amplitude, dist);
        const cplx anchor = crossings.empty() ? ref : crossings.back().beta;
        rev_amplitude = std::max(rev_amplitude, std::abs(beta - anchor));
        if (total_amplitude < opts.amplitude_tol && std::abs(drift(beta, params)) < 1e-13) break;
        const double s_now = section(beta);
        if (!(s_prev < 0.0 && s_now >= 0.0)) continue;
        if (dist > 0.25 * total_amplitude) continue;
        // Refine the crossing on the cubic Hermite interpolant of the step.
        const cplx d0 = drift(prev, params);
        const cplx d1 = drift(beta, params);
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (section(detail::hermite(prev, d0, beta, d1, h, mid)) < 0.0) lo = mid; else hi = mid;
        }
        const double u = 0.5 * (lo + hi);
        crossings.push_back({t - h + u * h, detail::hermite(prev, d0, beta, d1, h, u), rev_amplitude});
        rev_amplitude = 0.0;
        const std::size_t m = crossings.size();
        if (crossings.back().amplitude < opts.amplitude_tol) {
            throw NoLimitCycleError("classical", "post-transient motion amplitude below tolerance");
        }
        if (m >= 3) {
            const auto& c2 = crossings[m - 1];
            const auto& c1 = crossings[m - 2];
            const auto& c0 = crossings[m - 3];
            const double p1 = c2.t - c1.t;
            const double p0 = c1.t - c0.t;
            const bool returns_settled = std::abs(c2.beta - c1.beta) < 1e-4 * c2.amplitude;
            const bool period_settled = std::abs(p1 - p0) < 1e-4 * p1;
            const bool amplitude_settled = std::abs(c2.amplitude - c1.amplitude) < 1e-3 * c2.amplitude;
            if (returns_settled && period_settled && amplitude_settled) {
                accepted = true;
                period_guess = p1;
                start_guess = c2.beta;
                break;
            }
        }
    }
    if (!accepted) {
        if (total_amplitude < opts.amplitude_tol) {
            throw NoLimitCycleError("classical", "converged to a fixed point");
        }
        const std::size_t m = crossings.size();
        if (m >= 4 && crossings[m - 1].amplitude < 0.5 * crossings[1].amplitude) {
            throw NoLimitCycleError("classical", "trajectory spirals into a fixed point");
        }
        if (m < 2) {
            // No recurrent motion: monotone relaxation toward a fixed point.
            if (std::abs(drift(beta, params)) < 1e-6) {
                throw NoLimitCycleError("classical", "relaxing to a fixed point without recurrence");
            }
        }
        throw PeriodDetectionError("classical", "no stable period detected within the search budget");
    }

    // Newton shooting on (Re β0, Im β0, T) with the section as phase condition.
    const std::size_t n = opts.ngrid;
    cplx b0 = start_guess;
    double period = period_guess;
    auto residual_of = [&](cplx b, double T, detail::ShootingResult& sr) {
        sr = detail::shoot(b, T, n, params);
        const cplx g = sr.end - b;
        const double s = section(b);
        return std::sqrt(std::norm(g) + s * s);
    };
    detail::ShootingResult sr{};
    double res = residual_of(b0, period, sr);
    int iterations = 0;
    while (res >= opts.closure_tol || iterations < 2) {
        if (iterations++ >= opts.max_newton) {
            throw PeriodDetectionError("classical", "Newton shooting did not converge (residual " + std::to_string(res) + ")");
        }
        const cplx g = sr.end - b0;
        const cplx fend = drift(sr.end, params);
        std::array<std::array<double, 4>, 3> a{};
        a[0] = {sr.jac_x.real() - 1.0, sr.jac_y.real(), fend.real(), -g.real()};
        a[1] = {sr.jac_x.imag(), sr.jac_y.imag() - 1.0, fend.imag(), -g.imag()};
        a[2] = {fref.real(), fref.imag(), 0.0, -section(b0)};
        const auto dx = detail::solve3(a);
        double lambda = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving) {
            const cplx bt = b0 + lambda * cplx(dx[0], dx[1]);
            const double Tt = period + lambda * dx[2];
            if (Tt > 0.0) {
                detail::ShootingResult trial{};
                const double r = residual_of(bt, Tt, trial);
                if (r < res) {
                    b0 = bt;
                    period = Tt;
                    res = r;
                    sr = trial;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!improved) {
            if (res < 1e3 * opts.closure_tol) break;  // at the roundoff floor
            throw PeriodDetectionError("classical", "damped Newton stalled (residual " + std::to_string(res) + ")");
        }
    }

    LimitCycle cycle;
    cycle.params = params;
    cycle.period = period;
    cycle.newton_iterations = iterations;
    cycle.samples.resize(n);
    cycle.derivatives.resize(n);
    const double step = period / static_cast<double>(n);
    cplx b = b0;
    for (std::size_t k = 0; k < n; ++k) {
        cycle.samples[k] = b;
        cycle.derivatives[k] = drift(b, params);
        b = detail::classical_step(b, params, step);
    }
    cycle.closure_residual = std::abs(b - b0);
    cplx mean{};
    double intensity = 0.0;
    for (const cplx& s : cycle.samples) {
        mean += s;
        intensity += std::norm(s);
    }
    mean /= static_cast<double>(n);
    cycle.mean_intensity = intensity / static_cast<double>(n);
    for (const cplx& s : cycle.samples) cycle.amplitude = std::max(cycle.amplitude, std::abs(s - mean));
    if (cycle.amplitude < opts.amplitude_tol) {
        throw NoLimitCycleError("classical", "cycle amplitude below tolerance");
    }
    return cycle;
}

// --------------------------------------------------- scans and diagrams

struct BifurcationRow {
    double F2 = 0.0;
    std::vector<StationaryState> states;
    std::optional<double> cycle_mean_intensity;
    std::optional<double> cycle_amplitude;
    std::optional<double> cycle_period;
    std::string cycle_status;  // "cycle", or the error kind of the failed search
};

// Stationary branches and (where found) limit-cycle mean intensities over an
// evenly spaced F² range. Failed cycle searches are recorded, not raised.
inline std::vector<BifurcationRow> bifurcation_scan(double Delta, double F2_min, double F2_max, std::size_t points,
                                                    const CycleOptions& opts = {}) {
    if (points < 2 || !(F2_max > F2_min) || F2_min < 0.0) {
        throw PreconditionError("classical", "bifurcation_scan: invalid F² range");
    }
    std::vector<BifurcationRow> rows(points);
    parallel_for(points, [&](std::size_t i) {
        BifurcationRow& row = rows[i];
        row.F2 = F2_min + (F2_max - F2_min) * static_cast<double>(i) / static_cast<double>(points - 1);
        ModelParams p{std::sqrt(row.F2), Delta, 1.0};
        row.states = stationary_states(p);
        try {
            const LimitCycle c = find_limit_cycle(p, opts);
            row.cycle_mean_intensity = c.mean_intensity;
            row.cycle_amplitude = c.amplitude;
            row.cycle_period = c.period;
            row.cycle_status = "cycle";
        } catch (const Error& e) {
            row.cycle_status = std::string(to_string(e.kind()));
        }
    });
    return rows;
}

struct PhaseDiagramCell {
    double I = 0.0;
    double Delta2 = 0.0;
    PhaseRegion region;
};

// Region labels on a resolution x resolution grid over I ∈ [0, I_max], Δ² ∈ [0, Δ²_max].
inline std::vector<PhaseDiagramCell> phase_diagram(double I_max, double Delta2_max, std::size_t resolution) {
    if (resolution < 2 || !(I_max > 0.0) || !(Delta2_max >= 0.0)) {
        throw PreconditionError("classical", "phase_diagram: invalid grid");
    }
    std::vector<PhaseDiagramCell> cells(resolution * resolution);
    for (std::size_t a = 0; a < resolution; ++a) {
        const double d2 = Delta2_max * static_cast<double>(a) / static_cast<double>(resolution - 1);
        for (std::size_t b = 0; b < resolution; ++b) {
            const double I = I_max * static_cast<double>(b) / static_cast<double>(resolution - 1);
            cells[a * resolution + b] = {I, d2, classify(I, std::sqrt(d2))};
        }
    }
    return cells;
}

}  // namespace floqlin

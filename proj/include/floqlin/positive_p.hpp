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

// Positive-P stochastic oracle and the projected linear phase/amplitude
// simulator.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "floqlin/classical.hpp"
#include "floqlin/errors.hpp"
#include "floqlin/floquet.hpp"
#include "floqlin/fluctuations.hpp"
#include "floqlin/numerics.hpp"
#include "floqlin/parallel.hpp"

namespace floqlin {

struct PPState {
    cplx beta{};
    cplx beta_plus{};
    double tau = 0.0;
    bool diverged = false;
};

inline constexpr double kDivergenceRadius = 1e6;

// Euler–Maruyama step of the positive-P equations.
inline PPState pp_step(const PPState& s, const ModelParams& p, const NoiseDraw& noise,
                       double divergence_radius = kDivergenceRadius) {
    const double dt = noise.dt;
    if (!(dt > 0.0)) throw PreconditionError("positive_p", "pp_step requires dt > 0");
    if (s.diverged) return s;
    const cplx n = s.beta_plus * s.beta;
    const double root_gamma = std::sqrt(p.gamma);
    const double sqrt2 = std::numbers::sqrt2;
    PPState out;
    out.beta = s.beta + dt * (p.F + (cplx(1.0, p.Delta) - n) * s.beta) +
               dt * root_gamma * (sqrt2 * noise.xi + kI * s.beta * noise.eta);
    out.beta_plus = s.beta_plus + dt * (p.F + (cplx(1.0, -p.Delta) - n) * s.beta_plus) +
                    dt * root_gamma * (sqrt2 * std::conj(noise.xi) - kI * s.beta_plus * noise.eta_plus);
    out.tau = s.tau + dt;
    const double a = std::abs(out.beta);
    const double b = std::abs(out.beta_plus);
    out.diverged = !(a <= divergence_radius) || !(b <= divergence_radius);
    return out;
}

struct MomentIndex {
    unsigned m = 0;  // power of β⁺
    unsigned n = 0;  // power of β
};

struct EnsembleOptions {
    std::size_t n_traj = 10000;
    double dt = 1e-3;
    double t_end = 0.0;          // 0: window start + 20 relaxation times
    double window_start = 0.0;   // 0: 10 relaxation times
    std::uint64_t seed = 1;
    std::size_t record_points = 100;
    std::size_t sample_every = 10;  // steps between window samples
    double divergence_radius = kDivergenceRadius;
    double max_divergent_fraction = 0.01;
    std::vector<MomentIndex> moments{{0, 1}, {1, 1}, {0, 2}, {2, 2}};
};

struct EnsembleStats {
    std::size_t n_traj = 0;
    std::size_t divergent = 0;
    double gamma = 0.0;
    double window_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    std::vector<MomentIndex> moments;
    std::vector<double> times;
    std::vector<std::vector<cplx>> series;  // series[i][t]: ensemble ⟨β⁺ᵐβⁿ⟩ over time
    std::vector<cplx> steady;               // late-window moments ⟨β⁺ᵐβⁿ⟩
    std::vector<double> steady_se;          // standard errors (per real/imag: magnitude of both)

    // Normally ordered quantum moment ⟨a†ᵐaⁿ⟩ and its standard error.
    [[nodiscard]] std::pair<cplx, double> quantum(std::size_t i) const {
        const double scale = std::pow(gamma, -0.5 * (moments.at(i).m + moments.at(i).n));
        return {steady.at(i) * scale, steady_se.at(i) * scale};
    }
    [[nodiscard]] std::optional<std::size_t> find(unsigned m, unsigned n) const {
        for (std::size_t i = 0; i < moments.size(); ++i)
            if (moments[i].m == m && moments[i].n == n) return i;
        return std::nullopt;
    }
};

namespace detail {

struct Attractor {
    std::vector<cplx> points;  // cycle samples, or a single fixed point
    double relaxation_time = 1.0;
};

inline Attractor deterministic_attractor(const ModelParams& params) {
    Attractor a;
    try {
        const LimitCycle cycle = find_limit_cycle(params);
        const FloquetSystem sys = build_floquet(cycle);
        a.points = cycle.samples;
        a.relaxation_time = 1.0 / std::max(std::abs(sys.eigen.mu1.real()), 1e-3);
        return a;
    } catch (const NoLimitCycleError&) {
    }
    // Fixed point reached from the default initial condition.
    CycleOptions opts;
    cplx b = opts.initial;
    for (double t = 0.0; t < opts.search_time; t += opts.dt) b = classical_step(b, params, opts.dt);
    a.points = {b};
    const auto [lp, lm] = stability_eigenvalues(std::norm(b), params.Delta);
    const double rate = std::min(std::abs(lp.real()), std::abs(lm.real()));
    a.relaxation_time = 1.0 / std::max(rate, 1e-3);
    return a;
}

template <class T>
T moment(cplx bp, cplx b, const MomentIndex& k) {
    cplx v = 1.0;
    for (unsigned i = 0; i < k.m; ++i) v *= bp;
    for (unsigned i = 0; i < k.n; ++i) v *= b;
    return v;
}

}  // namespace detail

inline EnsembleStats simulate_ensemble(const ModelParams& params, EnsembleOptions opts) {
    params.validate();
    if (opts.n_traj < 100) throw PreconditionError("positive_p", "simulate_ensemble needs n_traj >= 100");
    if (!(opts.dt > 0.0) || opts.record_points < 2 || opts.sample_every == 0) {
        throw PreconditionError("positive_p", "invalid ensemble options");
    }
    const detail::Attractor att = detail::deterministic_attractor(params);
    if (opts.window_start <= 0.0) opts.window_start = 10.0 * att.relaxation_time;
    if (opts.t_end <= 0.0) opts.t_end = opts.window_start + 20.0 * att.relaxation_time;
    if (!(opts.t_end > opts.window_start)) throw PreconditionError("positive_p", "t_end must exceed the window start");

    const auto steps = static_cast<std::size_t>(std::ceil(opts.t_end / opts.dt));
    const std::size_t record_stride = std::max<std::size_t>(1, steps / (opts.record_points - 1));
    const auto window_step = static_cast<std::size_t>(std::ceil(opts.window_start / opts.dt));
    std::vector<std::size_t> record_steps;
    for (std::size_t s = 0; s <= steps; s += record_stride) record_steps.push_back(s);
    const std::size_t nk = opts.moments.size();
    const std::size_t nt = record_steps.size();

    // Fixed-size blocks summed in index order, then combined pairwise, so the
    // result does not depend on how blocks were scheduled.
    constexpr std::size_t block = 64;
    const std::size_t n_blocks = (opts.n_traj + block - 1) / block;
    std::vector<std::vector<cplx>> block_series(n_blocks, std::vector<cplx>(nk * nt));
    std::vector<std::size_t> block_alive(n_blocks, 0);
    std::vector<std::vector<cplx>> traj_avg(opts.n_traj, std::vector<cplx>(nk));
    std::vector<char> diverged(opts.n_traj, 0);

    parallel_for(n_blocks, [&](std::size_t bi) {
        const std::size_t begin = bi * block;
        const std::size_t end = std::min(opts.n_traj, begin + block);
        std::vector<cplx> local(nk * nt);
        std::vector<cplx> series(nk * nt);
        for (std::size_t i = begin; i < end; ++i) {
            GaussianStream stream(opts.seed, i);
            const std::size_t pick = att.points.size() == 1
                                         ? 0
                                         : (i * att.points.size()) / opts.n_traj;
            PPState s{att.points[pick], std::conj(att.points[pick]), 0.0, false};
            std::vector<cplx> acc(nk);
            std::size_t samples = 0;
            std::size_t rec = 0;
            for (std::size_t step = 0; step <= steps; ++step) {
                if (rec < nt && record_steps[rec] == step) {
                    for (std::size_t k = 0; k < nk; ++k)
                        series[k * nt + rec] = detail::moment<cplx>(s.beta_plus, s.beta, opts.moments[k]);
                    ++rec;
                }
                if (step >= window_step && (step - window_step) % opts.sample_every == 0) {
                    for (std::size_t k = 0; k < nk; ++k)
                        acc[k] += detail::moment<cplx>(s.beta_plus, s.beta, opts.moments[k]);
                    ++samples;
                }
                if (step == steps) break;
                s = pp_step(s, params, draw_noise(stream, opts.dt), opts.divergence_radius);
                if (s.diverged) break;
            }
            if (s.diverged) {
                diverged[i] = 1;
                continue;
            }
            for (std::size_t k = 0; k < nk; ++k) traj_avg[i][k] = acc[k] / static_cast<double>(samples);
            for (std::size_t j = 0; j < nk * nt; ++j) local[j] += series[j];
            ++block_alive[bi];
        }
        block_series[bi] = std::move(local);
    });

    EnsembleStats st;
    st.n_traj = opts.n_traj;
    st.gamma = params.gamma;
    st.window_start = opts.window_start;
    st.t_end = static_cast<double>(steps) * opts.dt;
    st.dt = opts.dt;
    st.moments = opts.moments;
    for (char d : diverged) st.divergent += d ? 1 : 0;
    if (static_cast<double>(st.divergent) > opts.max_divergent_fraction * static_cast<double>(opts.n_traj)) {
        throw ReliabilityError("positive_p", std::to_string(st.divergent) + " of " + std::to_string(opts.n_traj) +
                                                 " trajectories diverged");
    }
    const std::size_t alive = opts.n_traj - st.divergent;
    for (std::size_t s : record_steps) st.times.push_back(static_cast<double>(s) * opts.dt);
    st.series.assign(nk, std::vector<cplx>(nt));
    for (std::size_t k = 0; k < nk; ++k) {
        for (std::size_t t = 0; t < nt; ++t) {
            std::vector<cplx> parts(n_blocks);
            for (std::size_t b = 0; b < n_blocks; ++b) parts[b] = block_series[b][k * nt + t];
            st.series[k][t] = pairwise_sum(parts) / static_cast<double>(alive);
        }
    }
    st.steady.resize(nk);
    st.steady_se.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        std::vector<cplx> vals;
        vals.reserve(alive);
        for (std::size_t i = 0; i < opts.n_traj; ++i)
            if (!diverged[i]) vals.push_back(traj_avg[i][k]);
        const cplx mean = pairwise_sum(vals) / static_cast<double>(alive);
        std::vector<double> dev(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = std::norm(vals[i] - mean);
        const double var = pairwise_sum(dev) / static_cast<double>(alive - 1);
        st.steady[k] = mean;
        st.steady_se[k] = std::sqrt(var / static_cast<double>(alive));
    }
    return st;
}

struct ThetaSimOptions {
    double dt = 5e-3;
    double t_end = 0.0;  // 0: ten periods
    std::size_t n_traj = 10000;
    std::uint64_t seed = 1;
    std::size_t samples_per_period = 32;
    double max_contamination = 0.01;
};

struct ThetaSimResult {
    std::vector<double> times;
    std::vector<double> theta_variance;   // Var[θ(τ) − θ(0)]
    std::vector<double> c1_ratio;         // Re E[c1²] / (γ E[C(phase)]) at each time
    double slope = 0.0;                   // fit on period-averaged variance
    double r_squared = 0.0;
    double predicted_slope = 0.0;         // γ × mean phase-diffusion kernel
    double c1_steady_ratio = 0.0;         // late-time average of c1_ratio
    double contamination = 0.0;           // Σ(Im dθ)² / Σ(Re dθ)²
};

// Projected linear equations: dθ = √γ q0†(τ+θ) n dτ and dc1 = μ1 c1 dτ + √γ q1†(τ+θ) n dτ,
// n = (√2ξ + iβ̄η, √2ξ* − iβ̄*η⁺). θ keeps the real part of its increments once
// the imaginary share is confirmed negligible. The damped-mode noise carries an
// imaginary part of the same size as the real one, so c1 stays complex and is
// compared through its second moment E[c1²].
inline ThetaSimResult linearized_theta_sim(const FloquetSystem& sys, double gamma, ThetaSimOptions opts = {}) {
    if (!(gamma > 0.0) || !(opts.dt > 0.0) || opts.n_traj < 2 || opts.samples_per_period < 2) {
        throw PreconditionError("positive_p", "invalid theta simulation options");
    }
    const cplx mu1 = sys.eigen.mu1;
    if (!(mu1.real() < 0.0)) throw PreconditionError("positive_p", "Floquet system is not stable");
    const double T = sys.period();
    if (opts.t_end <= 0.0) opts.t_end = 10.0 * T;
    const std::vector<double> C = c_kernel(sys);
    const std::vector<double> k0 = theta_kernel(sys);

    const auto steps = static_cast<std::size_t>(std::ceil(opts.t_end / opts.dt));
    const double h = T / static_cast<double>(opts.samples_per_period);
    std::vector<std::size_t> rec_steps;
    for (std::size_t j = 0;; ++j) {
        const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(j) * h / opts.dt));
        if (s > steps) break;
        rec_steps.push_back(s);
    }
    const std::size_t nt = rec_steps.size();
    const double root_gamma = std::sqrt(gamma);
    const double sqrt2 = std::numbers::sqrt2;

    constexpr std::size_t block = 64;
    const std::size_t n_blocks = (opts.n_traj + block - 1) / block;
    // Per block: Σθ, Σθ², Σc1², ΣC(phase) per record time; Σ(Re dθ)², Σ(Im dθ)².
    struct Acc {
        std::vector<double> th, th2, cref;
        std::vector<cplx> c2;
        double re2 = 0.0, im2 = 0.0;
    };
    std::vector<Acc> acc(n_blocks);

    parallel_for(n_blocks, [&](std::size_t bi) {
        Acc a;
        a.th.assign(nt, 0.0);
        a.th2.assign(nt, 0.0);
        a.c2.assign(nt, cplx{});
        a.cref.assign(nt, 0.0);
        const std::size_t begin = bi * block;
        const std::size_t end = std::min(opts.n_traj, begin + block);
        for (std::size_t i = begin; i < end; ++i) {
            GaussianStream stream(opts.seed, i);
            double theta = 0.0;
            cplx c1{};
            std::size_t rec = 0;
            for (std::size_t step = 0; step <= steps; ++step) {
                const double tau = static_cast<double>(step) * opts.dt;
                double phase = std::fmod(tau + theta, T);
                if (phase < 0.0) phase += T;
                if (rec < nt && rec_steps[rec] == step) {
                    a.th[rec] += theta;
                    a.th2[rec] += theta * theta;
                    a.c2[rec] += c1 * c1;
                    a.cref[rec] += periodic_interp<double>(C, T, phase);
                    ++rec;
                }
                if (step == steps) break;
                const NoiseDraw nz = draw_noise(stream, opts.dt);
                const cplx b = periodic_interp<cplx>(sys.cycle.samples, T, phase);
                const Vec2 noise{sqrt2 * nz.xi + kI * b * nz.eta, sqrt2 * std::conj(nz.xi) - kI * std::conj(b) * nz.eta_plus};
                const Vec2 q0 = periodic_interp<Vec2>(sys.q0, T, phase);
                const Vec2 q1 = periodic_interp<Vec2>(sys.q1, T, phase);
                const cplx x0 = dot(q0, noise) * (root_gamma * opts.dt);
                const cplx x1 = dot(q1, noise) * (root_gamma * opts.dt);
                a.re2 += x0.real() * x0.real();
                a.im2 += x0.imag() * x0.imag();
                theta += x0.real();
                c1 += mu1 * c1 * opts.dt + x1;
            }
        }
        acc[bi] = std::move(a);
    });

    ThetaSimResult r;
    const auto n = static_cast<double>(opts.n_traj);
    double re2 = 0.0, im2 = 0.0;
    {
        std::vector<double> re(n_blocks), im(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            re[b] = acc[b].re2;
            im[b] = acc[b].im2;
        }
        re2 = pairwise_sum(re);
        im2 = pairwise_sum(im);
    }
    r.contamination = im2 / re2;
    if (!(r.contamination < opts.max_contamination)) {
        throw ModeConsistencyError("positive_p", "projected phase noise has an imaginary share of " +
                                                     std::to_string(r.contamination));
    }
    r.times.resize(nt);
    r.theta_variance.resize(nt);
    r.c1_ratio.resize(nt);
    std::vector<double> parts(n_blocks);
    std::vector<cplx> cparts(n_blocks);
    auto total = [&](auto member, std::size_t t) {
        for (std::size_t b = 0; b < n_blocks; ++b) parts[b] = (acc[b].*member)[t];
        return pairwise_sum(parts);
    };
    auto ctotal = [&](std::size_t t) {
        for (std::size_t b = 0; b < n_blocks; ++b) cparts[b] = acc[b].c2[t];
        return pairwise_sum(cparts);
    };
    for (std::size_t t = 0; t < nt; ++t) {
        r.times[t] = static_cast<double>(rec_steps[t]) * opts.dt;
        const double m1 = total(&Acc::th, t) / n;
        const double m2 = total(&Acc::th2, t) / n;
        r.theta_variance[t] = (m2 - m1 * m1) * n / (n - 1.0);
        const double cref = total(&Acc::cref, t);
        r.c1_ratio[t] = cref > 0.0 ? ctotal(t).real() / (gamma * cref) : 0.0;
    }

    // Period averages of the variance, then a straight-line fit.
    std::vector<double> px, py;
    for (std::size_t start = 0; start + opts.samples_per_period < nt; start += opts.samples_per_period) {
        double sx = 0.0, sy = 0.0;
        for (std::size_t j = start; j < start + opts.samples_per_period; ++j) {
            sx += r.times[j];
            sy += r.theta_variance[j];
        }
        px.push_back(sx / static_cast<double>(opts.samples_per_period));
        py.push_back(sy / static_cast<double>(opts.samples_per_period));
    }
    if (px.size() >= 2) {
        const double m = static_cast<double>(px.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t j = 0; j < px.size(); ++j) {
            sx += px[j];
            sy += py[j];
            sxx += px[j] * px[j];
            sxy += px[j] * py[j];
            syy += py[j] * py[j];
        }
        const double cov = sxy - sx * sy / m;
        const double vx = sxx - sx * sx / m;
        const double vy = syy - sy * sy / m;
        r.slope = cov / vx;
        r.r_squared = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    }
    r.predicted_slope = gamma * periodic_mean<double>(k0);

    // Damped-mode variance after ten relaxation times.
    const double settle = 10.0 / std::abs(mu1.real());
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t t = 0; t < nt; ++t) {
        if (r.times[t] >= settle) {
            sum += r.c1_ratio[t];
            ++cnt;
        }
    }
    r.c1_steady_ratio = cnt ? sum / static_cast<double>(cnt) : 0.0;
    return r;
}

}  // namespace floqlin

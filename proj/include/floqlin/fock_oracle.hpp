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

// Exact master-equation oracle in a truncated number basis.
//
// Generator: dρ/dτ = [G, ρ] + (γ/2) D[a²]ρ + D[a†]ρ, G = (F/√γ)(a† − a) + iΔ a†a,
// D[J]ρ = 2JρJ† − J†Jρ − ρJ†J. Operators are truncated at n_max, so the
// right-hand side is exactly trace preserving in the truncated space.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floqlin/classical.hpp"
#include "floqlin/errors.hpp"
#include "floqlin/numerics.hpp"
#include "floqlin/parallel.hpp"
#include "floqlin/phase_space.hpp"

namespace floqlin {

struct OracleParams {
    ModelParams model;
    std::size_t n_max = 40;
    double tolerance = 1e-9;      // on ||dρ/dτ||_F
    double max_time = 5000.0;
    double dt = 0.0;              // 0 selects a step from the spectral bound
    double leakage_tol = 1e-7;
    bool auto_escalate = true;
    std::size_t n_max_cap = 400;
    std::size_t check_interval = 100;

    void validate() const {
        model.validate();
        if (n_max < 4) throw PreconditionError("fock_oracle", "n_max must be >= 4");
        if (!(tolerance > 0.0) || !(max_time > 0.0) || !(leakage_tol > 0.0) || dt < 0.0 || check_interval == 0) {
            throw PreconditionError("fock_oracle", "tolerances and times must be positive");
        }
    }
};

struct FockState {
    std::size_t n_max = 0;
    DenseComplexMatrix rho;
    double leakage = 0.0;   // population of the top level
    double residual = 0.0;  // ||dρ/dτ||_F at return
    double time = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;

    FockState() = default;
    FockState(std::size_t nmax, DenseComplexMatrix r) : n_max(nmax), rho(std::move(r)) {
        if (rho.dim() != n_max + 1) throw DimensionMismatchError("fock_oracle", "density matrix size != n_max + 1");
        leakage = rho(n_max, n_max).real();
    }
    [[nodiscard]] std::size_t dim() const noexcept { return n_max + 1; }
};

inline FockState fock_projector(std::size_t n_max, std::size_t level) {
    if (level > n_max) throw PreconditionError("fock_oracle", "level above cutoff");
    DenseComplexMatrix r(n_max + 1);
    r(level, level) = 1.0;
    return {n_max, std::move(r)};
}

// |α⟩⟨α| from the explicit series e^{−|α|²/2} αⁿ/√n!, without renormalization.
inline FockState coherent_state(cplx alpha, std::size_t n_max) {
    std::vector<cplx> c(n_max + 1);
    c[0] = std::exp(-0.5 * std::norm(alpha));
    for (std::size_t n = 1; n <= n_max; ++n) c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    DenseComplexMatrix r(n_max + 1);
    for (std::size_t i = 0; i <= n_max; ++i)
        for (std::size_t j = 0; j <= n_max; ++j) r(i, j) = c[i] * std::conj(c[j]);
    return {n_max, std::move(r)};
}

namespace detail {

struct LindbladTables {
    std::size_t dim = 0;
    double drive = 0.0;  // F/√γ
    double delta = 0.0;
    double half_gamma = 0.0;
    std::vector<double> sq;       // √k, k ≤ dim
    std::vector<double> pair;     // √((k+1)(k+2))
    std::vector<double> gain;     // diagonal of a a† (zero at the top level)
    std::vector<double> loss;     // k(k−1)

    LindbladTables(const ModelParams& p, std::size_t d) : dim(d) {
        drive = p.F / std::sqrt(p.gamma);
        delta = p.Delta;
        half_gamma = 0.5 * p.gamma;
        sq.resize(d + 1);
        pair.resize(d);
        gain.resize(d);
        loss.resize(d);
        for (std::size_t k = 0; k <= d; ++k) sq[k] = std::sqrt(static_cast<double>(k));
        for (std::size_t k = 0; k < d; ++k) {
            const double kk = static_cast<double>(k);
            pair[k] = std::sqrt((kk + 1.0) * (kk + 2.0));
            gain[k] = k + 1 < d ? kk + 1.0 : 0.0;
            loss[k] = kk * (kk - 1.0);
        }
    }

    // out = L[rho] on the upper triangle, mirrored to keep exact Hermiticity.
    void apply(const cplx* rho, cplx* out) const {
        const std::size_t d = dim;
        auto r = [&](std::size_t m, std::size_t n) { return rho[m * d + n]; };
        for (std::size_t m = 0; m < d; ++m) {
            for (std::size_t n = m; n < d; ++n) {
                const cplx rmn = r(m, n);
                cplx acc{};
                cplx coh{};
                if (m > 0) coh += sq[m] * r(m - 1, n);
                if (m + 1 < d) coh -= sq[m + 1] * r(m + 1, n);
                if (n + 1 < d) coh -= sq[n + 1] * r(m, n + 1);
                if (n > 0) coh += sq[n] * r(m, n - 1);
                acc += drive * coh;
                acc += cplx(0.0, delta * (static_cast<double>(m) - static_cast<double>(n))) * rmn;
                cplx tp = -(loss[m] + loss[n]) * rmn;
                if (n + 2 < d) tp += 2.0 * pair[m] * pair[n] * r(m + 2, n + 2);
                acc += half_gamma * tp;
                if (m > 0) acc += 2.0 * sq[m] * sq[n] * r(m - 1, n - 1);
                acc -= (gain[m] + gain[n]) * rmn;
                out[m * d + n] = acc;
                if (n != m) out[n * d + m] = std::conj(acc);
            }
            out[m * d + m] = out[m * d + m].real();
        }
    }
};

inline double frobenius(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

}  // namespace detail

inline DenseComplexMatrix lindblad_rhs(const DenseComplexMatrix& rho, const OracleParams& params) {
    if (rho.dim() != params.n_max + 1) {
        throw DimensionMismatchError("fock_oracle", "density matrix dimension does not match the cutoff");
    }
    const detail::LindbladTables tab(params.model, rho.dim());
    DenseComplexMatrix out(rho.dim());
    tab.apply(rho.data().data(), out.data().data());
    return out;
}

inline DenseComplexMatrix lindblad_rhs(const FockState& state, const OracleParams& params) {
    return lindblad_rhs(state.rho, params);
}

// Smallest eigenvalue of the (Hermitian part of the) density matrix.
inline double min_eigenvalue(const DenseComplexMatrix& rho) {
    const auto d = static_cast<Eigen::Index>(rho.dim());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            m(i, j) = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Step size from a bound on the generator's spectral radius; RK4 is stable
// for h·|λ| up to about 2.8 on both axes.
inline double default_oracle_step(const ModelParams& p, std::size_t n_max) {
    const double n = static_cast<double>(n_max);
    const double bound = p.gamma * n * (n - 1.0) + 2.0 * (n + 1.0) + std::abs(p.Delta) * n +
                         4.0 * std::abs(p.F) / std::sqrt(p.gamma) * std::sqrt(n + 1.0);
    return std::min(0.05, 2.0 / bound);
}

namespace detail {

inline FockState evolve_at_cutoff(const OracleParams& params, const DenseComplexMatrix& start) {
    const std::size_t d = params.n_max + 1;
    const LindbladTables tab(params.model, d);
    const std::size_t size = d * d;
    std::vector<cplx> rho(start.data().begin(), start.data().end());
    std::vector<cplx> k1(size), k2(size), k3(size), k4(size), tmp(size), checkpoint = rho;
    double dt = params.dt > 0.0 ? params.dt : default_oracle_step(params.model, params.n_max);
    double t = 0.0, t_checkpoint = 0.0;
    std::size_t steps = 0;

    auto trace = [&](const std::vector<cplx>& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += v[i * d + i].real();
        return s;
    };
    const double trace0 = trace(rho);

    auto unstable = [&]() {
        for (const cplx& z : rho) {
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1.0 + 1e-6) return true;
        }
        return std::abs(trace(rho) - trace0) > 1e-9;
    };

    while (true) {
        tab.apply(rho.data(), k1.data());
        const double residual = frobenius(k1);
        if (residual < params.tolerance) {
            DenseComplexMatrix out(d);
            std::copy(rho.begin(), rho.end(), out.data().begin());
            FockState st(params.n_max, std::move(out));
            st.residual = residual;
            st.time = t;
            st.dt = dt;
            st.steps = steps;
            return st;
        }
        if (t >= params.max_time) {
            throw ConvergenceError("fock_oracle", "steady state not reached by tau = " + std::to_string(t) +
                                                      " (residual " + std::to_string(residual) + ")");
        }
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + (0.5 * dt) * k1[i];
        tab.apply(tmp.data(), k2.data());
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + (0.5 * dt) * k2[i];
        tab.apply(tmp.data(), k3.data());
        for (std::size_t i = 0; i < size; ++i) tmp[i] = rho[i] + dt * k3[i];
        tab.apply(tmp.data(), k4.data());
        for (std::size_t i = 0; i < size; ++i) rho[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += dt;
        ++steps;

        if (steps % params.check_interval == 0) {
            bool bad = unstable();
            if (!bad) {
                DenseComplexMatrix view(d);
                std::copy(rho.begin(), rho.end(), view.data().begin());
                bad = min_eigenvalue(view) < -1e-8;
            }
            if (bad) {
                dt *= 0.5;
                if (dt < 1e-8) throw ConvergenceError("fock_oracle", "time step collapsed while stabilizing");
                rho = checkpoint;
                t = t_checkpoint;
                continue;
            }
            checkpoint = rho;
            t_checkpoint = t;
        }
    }
}

inline DenseComplexMatrix embed(const DenseComplexMatrix& src, std::size_t dim) {
    DenseComplexMatrix out(dim);
    const std::size_t n = std::min(dim, src.dim());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = src(i, j);
    return out;
}

}  // namespace detail

// Steady state by time evolution, from the vacuum unless an initial state is
// given. The cutoff grows by 1.5× while the top level holds too much weight.
inline FockState evolve_steady(OracleParams params, const std::optional<DenseComplexMatrix>& initial = std::nullopt) {
    params.validate();
    while (true) {
        DenseComplexMatrix start = initial ? detail::embed(*initial, params.n_max + 1)
                                           : fock_projector(params.n_max, 0).rho;
        FockState st = detail::evolve_at_cutoff(params, start);
        if (st.leakage <= params.leakage_tol || !params.auto_escalate) return st;
        const auto next = static_cast<std::size_t>(std::ceil(1.5 * static_cast<double>(params.n_max)));
        if (next > params.n_max_cap) {
            throw CutoffError("fock_oracle", "cutoff escalation exceeded the cap of " +
                                                 std::to_string(params.n_max_cap) + " (leakage " +
                                                 std::to_string(st.leakage) + ")");
        }
        params.n_max = next;
    }
}

// Tr[ρ a†^m a^n].
inline cplx expectation(const FockState& state, unsigned m, unsigned n) {
    if (2 * (m + n) > state.n_max) {
        throw AccuracyError("fock_oracle", "moment order too high for the cutoff (need m + n <= n_max / 2)");
    }
    cplx acc{};
    for (std::size_t j = n; j <= state.n_max; ++j) {
        const std::size_t k = j - n + m;
        if (k > state.n_max) break;
        const double jd = static_cast<double>(j);
        const double base = static_cast<double>(j - n);
        const double kd = static_cast<double>(k);
        const double log_coeff = 0.5 * (std::lgamma(jd + 1.0) - std::lgamma(base + 1.0)) +
                                 0.5 * (std::lgamma(kd + 1.0) - std::lgamma(base + 1.0));
        acc += std::exp(log_coeff) * state.rho(j, k);
    }
    return acc;
}

// Symmetric-ordered quadrature moments, x = a + a†, p = −i(a − a†).
struct QuadratureMoments {
    Real2 mean{};
    Real2x2 covariance{};
};

inline QuadratureMoments quadrature_moments(const FockState& state) {
    const cplx a = expectation(state, 0, 1);
    const cplx a2 = expectation(state, 0, 2);
    const double n = expectation(state, 1, 1).real();
    QuadratureMoments q;
    q.mean = {2.0 * a.real(), 2.0 * a.imag()};
    const double xx = 2.0 * a2.real() + 2.0 * n + 1.0;
    const double pp = -2.0 * a2.real() + 2.0 * n + 1.0;
    const double xp = 2.0 * a2.imag();
    q.covariance[0][0] = xx - q.mean[0] * q.mean[0];
    q.covariance[1][1] = pp - q.mean[1] * q.mean[1];
    q.covariance[0][1] = q.covariance[1][0] = xp - q.mean[0] * q.mean[1];
    return q;
}

// Wigner function on a grid. Matrix element |m⟩⟨n| (m = n + k) contributes
// (1/2π)(−1)ⁿ √(n!/m!) (x − ip)^k L_n^k(r²) e^{−r²/2}; the normalized
// Laguerre recurrence keeps every term O(1) at large n and r.
inline WignerGrid exact_wigner(const FockState& state, const GridSpec& spec) {
    WignerGrid grid = make_grid(spec);
    const std::size_t d = state.dim();
    const DenseComplexMatrix& rho = state.rho;
    std::vector<double> log_fact(d + 1);
    for (std::size_t k = 0; k <= d; ++k) log_fact[k] = std::lgamma(static_cast<double>(k) + 1.0);

    parallel_for(grid.ny, [&](std::size_t j) {
        const double p = grid.p(j);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i);
            const double r2 = x * x + p * p;
            const double r = std::sqrt(r2);
            const cplx phase = r > 0.0 ? cplx(x, -p) / r : cplx(1.0, 0.0);
            double total = 0.0;
            cplx rot = 1.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double kd = static_cast<double>(k);
                double l0;
                if (r > 0.0) {
                    l0 = std::exp(kd * std::log(r) - 0.5 * log_fact[k] - 0.5 * r2);
                } else {
                    l0 = k == 0 ? 1.0 : 0.0;
                }
                double prev = 0.0, cur = l0;
                cplx sum{};
                double sign = 1.0;
                for (std::size_t n = 0; n + k < d; ++n) {
                    sum += sign * cur * rho(n + k, n);
                    const double nd = static_cast<double>(n);
                    const double next = ((2.0 * nd + 1.0 + kd - r2) * cur - std::sqrt(nd * (nd + kd)) * prev) /
                                        std::sqrt((nd + 1.0) * (nd + 1.0 + kd));
                    prev = cur;
                    cur = next;
                    sign = -sign;
                }
                total += k == 0 ? sum.real() : 2.0 * (sum * rot).real();
                rot *= phase;
            }
            grid.values[j * grid.nx + i] = total / (2.0 * std::numbers::pi);
        }
    });
    return grid;
}

}  // namespace floqlin

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

// floquet.hpp: Floquet eigensystem of a classical limit cycle.
//
// Conventions:
//   L(τ)   linear stability matrix of the cycle
//   R(τ)   fundamental matrix, R' = L R, R(0) = 1; R(T) is the monodromy
//   μ_j    Floquet exponents, log(multiplier_j) / T; μ_0 is the Goldstone one
//   p_j    right Floquet vectors, p_j' = (L − μ_j) p_j
//   q_j    left Floquet vectors, stored as columns; q_j†' = q_j† (μ_j − L)
//
// Normalization: p_0 equals the orbit tangent (∂τβ̄, ∂τβ̄*) exactly, so that
// the Goldstone coordinate is a time shift; p_1 has conjugate-symmetric
// components of unit modulus; q_j† p_l = δ_jl fixes the left vectors.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "floqlin/classical.hpp"
#include "floqlin/errors.hpp"
#include "floqlin/numerics.hpp"

namespace floqlin {

inline Complex2Matrix stability_matrix(cplx beta_bar, double Delta) noexcept {
    const double diag = 1.0 - 2.0 * std::norm(beta_bar);
    return {{cplx(diag, Delta), -beta_bar * beta_bar, -std::conj(beta_bar * beta_bar), cplx(diag, -Delta)}};
}

struct FloquetOptions {
    std::size_t substeps = 4;       // RK4 steps per cycle grid interval
    double periodicity_tol = 1e-5;  // on ||p_j(T) − p_j(0)||, relative to ||p_j(0)||
};

struct MonodromyEigen {
    cplx multiplier0{};
    cplx multiplier1{};
    cplx mu0{};
    cplx mu1{};
    Vec2 v0, v1;  // right eigenvectors of R(T)
    Vec2 w0, w1;  // left eigenvectors, w_j† v_l = δ_jl
};

struct FloquetSystem {
    LimitCycle cycle;
    std::vector<Complex2Matrix> stability;    // L(τ_k), k < N
    std::vector<Complex2Matrix> fundamental;  // R(τ_k), k ≤ N; back() is R(T)
    Complex2Matrix monodromy;
    Complex2Matrix log_monodromy;             // M, exp(M T) = R(T)
    MonodromyEigen eigen;
    std::vector<Vec2> p0, p1, q0, q1;         // samples on the cycle grid
    double mean_trace = 0.0;                  // (1/T) ∫ tr L
    double goldstone_residual = 0.0;          // |μ0| T, a quality metric
    double periodicity_error = 0.0;
    double orthogonality_error = 0.0;

    [[nodiscard]] std::size_t ngrid() const noexcept { return cycle.ngrid(); }
    [[nodiscard]] double period() const noexcept { return cycle.period; }
    [[nodiscard]] double Delta() const noexcept { return cycle.params.Delta; }
};

namespace detail {

// Orbit re-integrated from β̄(0) at half the Floquet step, so every RK4 stage
// of the linear problems lands on a stored sample.
struct DenseOrbit {
    std::vector<cplx> beta;  // 2 N s + 1 samples over [0, T]
    double half_step = 0.0;
    std::size_t stride = 0;  // dense samples per cycle grid interval
};

inline DenseOrbit dense_orbit(const LimitCycle& cycle, std::size_t substeps) {
    DenseOrbit d;
    const std::size_t n = cycle.ngrid();
    const std::size_t count = 2 * n * substeps;
    d.half_step = cycle.period / static_cast<double>(count);
    d.stride = 2 * substeps;
    d.beta.resize(count + 1);
    cplx b = cycle.samples.front();
    for (std::size_t j = 0; j <= count; ++j) {
        d.beta[j] = b;
        if (j < count) b = classical_step(b, cycle.params, d.half_step);
    }
    return d;
}

// RK4 for a column x' = (L − μ) x, stepping from dense index j by ±2.
inline Vec2 column_step(const DenseOrbit& d, double Delta, cplx mu, std::size_t j, int dir, const Vec2& x) {
    const double h = 2.0 * d.half_step * dir;
    auto f = [&](std::size_t idx, const Vec2& y) {
        return stability_matrix(d.beta[idx], Delta) * y - mu * y;
    };
    const std::size_t jm = dir > 0 ? j + 1 : j - 1;
    const std::size_t je = dir > 0 ? j + 2 : j - 2;
    const Vec2 k1 = f(j, x);
    const Vec2 k2 = f(jm, x + (0.5 * h) * k1);
    const Vec2 k3 = f(jm, x + (0.5 * h) * k2);
    const Vec2 k4 = f(je, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// RK4 for a row r' = r (μ − L).
inline Vec2 row_step(const DenseOrbit& d, double Delta, cplx mu, std::size_t j, int dir, const Vec2& r) {
    const double h = 2.0 * d.half_step * dir;
    auto f = [&](std::size_t idx, const Vec2& y) {
        return mu * y - row_times(y, stability_matrix(d.beta[idx], Delta));
    };
    const std::size_t jm = dir > 0 ? j + 1 : j - 1;
    const std::size_t je = dir > 0 ? j + 2 : j - 2;
    const Vec2 k1 = f(j, r);
    const Vec2 k2 = f(jm, r + (0.5 * h) * k1);
    const Vec2 k3 = f(jm, r + (0.5 * h) * k2);
    const Vec2 k4 = f(je, r + h * k3);
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Complex2Matrix matrix_step(const DenseOrbit& d, double Delta, std::size_t j, const Complex2Matrix& x) {
    const double h = 2.0 * d.half_step;
    auto f = [&](std::size_t idx, const Complex2Matrix& y) { return stability_matrix(d.beta[idx], Delta) * y; };
    const Complex2Matrix k1 = f(j, x);
    const Complex2Matrix k2 = f(j + 1, x + (0.5 * h) * k1);
    const Complex2Matrix k3 = f(j + 1, x + (0.5 * h) * k2);
    const Complex2Matrix k4 = f(j + 2, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrate a column (or row) over one period and sample on the cycle grid.
// Forward runs start at τ = 0, backward runs start at τ = T.
template <class Step>
std::vector<Vec2> sweep(const DenseOrbit& d, std::size_t n, bool forward, const Vec2& start, Vec2& end_value,
                        const Step& step) {
    std::vector<Vec2> out(n);
    const std::size_t last = d.beta.size() - 1;
    Vec2 x = start;
    if (forward) {
        for (std::size_t j = 0; j < last; j += 2) {
            if (j % d.stride == 0) out[j / d.stride] = x;
            x = step(j, +1, x);
        }
    } else {
        for (std::size_t j = last; j > 0; j -= 2) {
            x = step(j, -1, x);
            if ((j - 2) % d.stride == 0) out[(j - 2) / d.stride] = x;
        }
    }
    end_value = x;
    return out;
}

}  // namespace detail

// R(τ_k) on the cycle grid plus R(T) as the final entry.
inline std::vector<Complex2Matrix> fundamental_matrix(const LimitCycle& cycle, double Delta,
                                                      std::size_t substeps = 4) {
    const detail::DenseOrbit d = detail::dense_orbit(cycle, substeps);
    const std::size_t n = cycle.ngrid();
    std::vector<Complex2Matrix> out;
    out.reserve(n + 1);
    Complex2Matrix r = Complex2Matrix::identity();
    const std::size_t last = d.beta.size() - 1;
    for (std::size_t j = 0; j < last; j += 2) {
        if (j % d.stride == 0) out.push_back(r);
        r = detail::matrix_step(d, Delta, j, r);
        if (!r.finite()) {
            throw DivergenceError("floquet", "fundamental matrix integration diverged");
        }
    }
    out.push_back(r);
    return out;
}

// Eigen-analysis of the monodromy. The multiplier closest to one is the
// Goldstone multiplier; μ0 is reported as measured, not forced to zero.
inline MonodromyEigen monodromy_eigen(const Complex2Matrix& R_T, double T) {
    if (!(T > 0.0)) throw PreconditionError("floquet", "monodromy_eigen: T must be > 0");
    Eig2 e;
    try {
        e = eig2(R_T);
    } catch (const DegenerateSpectrumError&) {
        throw DegenerateMonodromyError("floquet", "monodromy multipliers are not separated");
    }
    if (std::abs(e.values[0] - 1.0) < 1e-6 && std::abs(e.values[1] - 1.0) < 1e-6) {
        throw DegenerateMonodromyError("floquet", "both multipliers are near one (cycle at a bifurcation)");
    }
    const std::size_t g = std::abs(e.values[0] - 1.0) <= std::abs(e.values[1] - 1.0) ? 0 : 1;
    const std::size_t o = 1 - g;
    auto exponent = [&](cplx m) {
        if (m.real() < 0.0 && std::abs(m.imag()) <= 1e-10 * std::abs(m)) {
            throw BranchCutError("floquet", "negative real Floquet multiplier");
        }
        return std::log(m) / T;
    };
    MonodromyEigen out;
    out.multiplier0 = e.values[g];
    out.multiplier1 = e.values[o];
    out.mu0 = exponent(out.multiplier0);
    out.mu1 = exponent(out.multiplier1);
    out.v0 = e.right[g];
    out.v1 = e.right[o];
    out.w0 = e.left[g];
    out.w1 = e.left[o];
    return out;
}

// Closed-form left vector q1 = Π1 exp{∫_0^τ (⟨tr L⟩ − tr L)}, Π1 = (−i∂β̄, i∂β̄*),
// normalized to f(0) = 1. mu1 plays the role of ⟨tr L⟩.
inline std::vector<Vec2> analytic_q1(const LimitCycle& cycle, double Delta, cplx mu1) {
    const std::size_t n = cycle.ngrid();
    std::vector<double> trace(n);
    for (std::size_t k = 0; k < n; ++k) trace[k] = stability_matrix(cycle.samples[k], Delta).trace().real();
    const std::vector<double> integral = periodic_antiderivative(trace, cycle.period);
    std::vector<Vec2> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx f = std::exp(mu1 * cycle.tau(k) - integral[k]);
        const cplx d = cycle.derivatives[k];
        out[k] = Vec2{-kI * d, kI * std::conj(d)} * f;
    }
    return out;
}

// Full Floquet construction for a limit cycle.
inline FloquetSystem build_floquet(const LimitCycle& cycle, const FloquetOptions& opts = {}) {
    const std::size_t n = cycle.ngrid();
    const double T = cycle.period;
    const double Delta = cycle.params.Delta;
    if (n < 8 || opts.substeps < 1) throw PreconditionError("floquet", "build_floquet: grid too coarse");

    FloquetSystem sys;
    sys.cycle = cycle;
    sys.stability.resize(n);
    std::vector<double> trace(n);
    for (std::size_t k = 0; k < n; ++k) {
        sys.stability[k] = stability_matrix(cycle.samples[k], Delta);
        trace[k] = sys.stability[k].trace().real();
    }
    sys.mean_trace = periodic_mean<double>(trace);

    const detail::DenseOrbit d = detail::dense_orbit(cycle, opts.substeps);
    sys.fundamental = fundamental_matrix(cycle, Delta, opts.substeps);
    sys.monodromy = sys.fundamental.back();
    sys.log_monodromy = (1.0 / T) * principal_log2(sys.monodromy);
    sys.eigen = monodromy_eigen(sys.monodromy, T);
    sys.goldstone_residual = std::abs(sys.eigen.mu0) * T;

    // Fix the scale of v0 to the orbit tangent and the phase of v1 to the
    // conjugate-symmetric form, then rebuild w from the inverse basis.
    MonodromyEigen& e = sys.eigen;
    const Vec2 tangent{cycle.derivatives[0], std::conj(cycle.derivatives[0])};
    e.v0 = e.v0 * (dot(e.v0, tangent) / dot(e.v0, e.v0));
    {
        const cplx ratio = std::conj(e.v1.a) / e.v1.b;
        cplx chi = std::polar(1.0, 0.5 * std::arg(ratio));
        if ((chi * e.v1.a).real() < 0.0) chi = -chi;
        e.v1 = e.v1 * (chi / std::abs(e.v1.a));
    }
    const Complex2Matrix basis{{e.v0.a, e.v1.a, e.v0.b, e.v1.b}};
    const Complex2Matrix inv = basis.inverse();
    e.w0 = conj(Vec2{inv(0, 0), inv(0, 1)});
    e.w1 = conj(Vec2{inv(1, 0), inv(1, 1)});

    // The damped multiplier is tiny next to the O(1) entries of R(T), so its
    // value read off the monodromy carries a large relative error. Integrating
    // v1 backwards over one period amplifies it by 1/multiplier instead, which
    // measures the multiplier to full relative precision.
    {
        Vec2 y = e.v1;
        const std::size_t last = d.beta.size() - 1;
        for (std::size_t j = last; j > 0; j -= 2) y = detail::column_step(d, Delta, 0.0, j, -1, y);
        const cplx m1 = dot(y, e.v1) / dot(y, y);
        if (m1.real() < 0.0 && std::abs(m1.imag()) <= 1e-10 * std::abs(m1)) {
            throw BranchCutError("floquet", "negative real Floquet multiplier");
        }
        e.multiplier1 = m1;
        e.mu1 = std::log(m1) / T;
    }

    const cplx mu0 = e.mu0;
    const cplx mu1 = e.mu1;
    auto col = [&](cplx mu) {
        return [&, mu](std::size_t j, int dir, const Vec2& x) { return detail::column_step(d, Delta, mu, j, dir, x); };
    };
    auto row = [&](cplx mu) {
        return [&, mu](std::size_t j, int dir, const Vec2& x) { return detail::row_step(d, Delta, mu, j, dir, x); };
    };
    const Vec2 r0 = conj(e.w0);
    const Vec2 r1 = conj(e.w1);
    Vec2 end_p0, end_p1, end_r0, end_r1;
    // Each vector is propagated in the direction in which it is dynamically
    // stable; periodicity closes the loop at the other end.
    sys.p0 = detail::sweep(d, n, true, e.v0, end_p0, col(mu0));
    sys.p1 = detail::sweep(d, n, false, e.v1, end_p1, col(mu1));
    std::vector<Vec2> rows0 = detail::sweep(d, n, false, r0, end_r0, row(mu0));
    std::vector<Vec2> rows1 = detail::sweep(d, n, true, r1, end_r1, row(mu1));
    sys.q0.resize(n);
    sys.q1.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        sys.q0[k] = conj(rows0[k]);
        sys.q1[k] = conj(rows1[k]);
    }

    auto rel = [](const Vec2& a, const Vec2& b) { return norm(a - b) / std::max(norm(b), 1e-300); };
    sys.periodicity_error = std::max({rel(end_p0, e.v0), rel(end_p1, e.v1), rel(end_r0, r0), rel(end_r1, r1)});
    if (!(sys.periodicity_error <= opts.periodicity_tol)) {
        throw ModeConsistencyError("floquet", "Floquet vectors are not T-periodic (error " +
                                                  std::to_string(sys.periodicity_error) + "); refine the grid");
    }
    double ortho = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::array<Vec2, 2> ps{sys.p0[k], sys.p1[k]};
        const std::array<Vec2, 2> qs{sys.q0[k], sys.q1[k]};
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b)
                ortho = std::max(ortho, std::abs(dot(qs[a], ps[b]) - (a == b ? 1.0 : 0.0)));
    }
    sys.orthogonality_error = ortho;
    return sys;
}

}  // namespace floqlin

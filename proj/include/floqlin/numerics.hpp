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

// numerics.hpp: Small dense complex linear algebra, fixed-step RK4,
// special functions and seeded Gaussian streams used by every other module.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floqlin/errors.hpp"

namespace floqlin {

using cplx = std::complex<double>;

inline constexpr cplx kI{0.0, 1.0};

// --------------------------------------------------------------- 2-vectors

struct Vec2 {
    cplx a{};
    cplx b{};

    constexpr cplx& operator[](std::size_t i) noexcept { return i == 0 ? a : b; }
    constexpr const cplx& operator[](std::size_t i) const noexcept { return i == 0 ? a : b; }

    Vec2& operator+=(const Vec2& o) noexcept { a += o.a; b += o.b; return *this; }
    Vec2& operator-=(const Vec2& o) noexcept { a -= o.a; b -= o.b; return *this; }
    Vec2& operator*=(cplx s) noexcept { a *= s; b *= s; return *this; }
};

inline Vec2 operator+(Vec2 x, const Vec2& y) noexcept { return x += y; }
inline Vec2 operator-(Vec2 x, const Vec2& y) noexcept { return x -= y; }
inline Vec2 operator*(cplx s, Vec2 x) noexcept { return x *= s; }
inline Vec2 operator*(Vec2 x, cplx s) noexcept { return x *= s; }
inline Vec2 operator*(double s, Vec2 x) noexcept { return x *= cplx(s, 0.0); }

inline double norm(const Vec2& x) noexcept { return std::sqrt(std::norm(x.a) + std::norm(x.b)); }
inline Vec2 conj(const Vec2& x) noexcept { return {std::conj(x.a), std::conj(x.b)}; }
// x† y
inline cplx dot(const Vec2& x, const Vec2& y) noexcept {
    return std::conj(x.a) * y.a + std::conj(x.b) * y.b;
}
// xᵀ y, no conjugation
inline cplx dotu(const Vec2& x, const Vec2& y) noexcept { return x.a * y.a + x.b * y.b; }

// ----------------------------------------------------------- 2x2 matrices

// Row-major complex 2x2 matrix.
struct Complex2Matrix {
    std::array<cplx, 4> m{};

    static constexpr Complex2Matrix identity() noexcept { return {{1.0, 0.0, 0.0, 1.0}}; }
    static constexpr Complex2Matrix diag(cplx x, cplx y) noexcept { return {{x, 0.0, 0.0, y}}; }

    constexpr cplx& operator()(std::size_t i, std::size_t j) noexcept { return m[2 * i + j]; }
    constexpr const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return m[2 * i + j]; }

    [[nodiscard]] cplx trace() const noexcept { return m[0] + m[3]; }
    [[nodiscard]] cplx det() const noexcept { return m[0] * m[3] - m[1] * m[2]; }
    [[nodiscard]] Complex2Matrix adjoint() const noexcept {
        return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
    }
    [[nodiscard]] Complex2Matrix transpose() const noexcept { return {{m[0], m[2], m[1], m[3]}}; }
    [[nodiscard]] double norm() const noexcept {
        return std::sqrt(std::norm(m[0]) + std::norm(m[1]) + std::norm(m[2]) + std::norm(m[3]));
    }
    [[nodiscard]] bool finite() const noexcept {
        return std::all_of(m.begin(), m.end(), [](cplx z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }
    [[nodiscard]] Complex2Matrix inverse() const {
        const cplx d = det();
        if (d == cplx(0.0)) {
            throw PreconditionError("numerics", "inverse of a singular 2x2 matrix");
        }
        return {{m[3] / d, -m[1] / d, -m[2] / d, m[0] / d}};
    }

    Complex2Matrix& operator+=(const Complex2Matrix& o) noexcept {
        for (std::size_t i = 0; i < 4; ++i) m[i] += o.m[i];
        return *this;
    }
    Complex2Matrix& operator-=(const Complex2Matrix& o) noexcept {
        for (std::size_t i = 0; i < 4; ++i) m[i] -= o.m[i];
        return *this;
    }
    Complex2Matrix& operator*=(cplx s) noexcept {
        for (auto& z : m) z *= s;
        return *this;
    }
};

inline Complex2Matrix operator+(Complex2Matrix x, const Complex2Matrix& y) noexcept { return x += y; }
inline Complex2Matrix operator-(Complex2Matrix x, const Complex2Matrix& y) noexcept { return x -= y; }
inline Complex2Matrix operator*(cplx s, Complex2Matrix x) noexcept { return x *= s; }
inline Complex2Matrix operator*(Complex2Matrix x, cplx s) noexcept { return x *= s; }
inline Complex2Matrix operator*(double s, Complex2Matrix x) noexcept { return x *= cplx(s, 0.0); }

inline Complex2Matrix operator*(const Complex2Matrix& x, const Complex2Matrix& y) noexcept {
    return {{x.m[0] * y.m[0] + x.m[1] * y.m[2], x.m[0] * y.m[1] + x.m[1] * y.m[3],
             x.m[2] * y.m[0] + x.m[3] * y.m[2], x.m[2] * y.m[1] + x.m[3] * y.m[3]}};
}

inline Vec2 operator*(const Complex2Matrix& x, const Vec2& v) noexcept {
    return {x.m[0] * v.a + x.m[1] * v.b, x.m[2] * v.a + x.m[3] * v.b};
}

// Row vector times matrix: (rᵀ M)ᵀ. Rows are stored as plain Vec2.
inline Vec2 row_times(const Vec2& r, const Complex2Matrix& x) noexcept {
    return {r.a * x.m[0] + r.b * x.m[2], r.a * x.m[1] + r.b * x.m[3]};
}

// Outer product x yᵀ (no conjugation).
inline Complex2Matrix outer(const Vec2& x, const Vec2& y) noexcept {
    return {{x.a * y.a, x.a * y.b, x.b * y.a, x.b * y.b}};
}

// Matrix exponential by Cayley-Hamilton: exp(M) = e^s [cosh q I + sinh(q)/q (M - s I)].
inline Complex2Matrix expm2(const Complex2Matrix& x) {
    const cplx s = 0.5 * x.trace();
    const cplx q = std::sqrt(s * s - x.det());
    cplx sinhc;
    if (std::abs(q) < 1e-4) {
        const cplx q2 = q * q;
        sinhc = 1.0 + q2 / 6.0 + q2 * q2 / 120.0;
    } else {
        sinhc = std::sinh(q) / q;
    }
    const Complex2Matrix shifted = x - s * Complex2Matrix::identity();
    return std::exp(s) * (std::cosh(q) * Complex2Matrix::identity() + sinhc * shifted);
}

// Eigen-decomposition of a 2x2 matrix with bi-orthonormal left/right vectors.
struct Eig2 {
    std::array<cplx, 2> values{};
    std::array<Vec2, 2> right{};  // unit Euclidean norm
    std::array<Vec2, 2> left{};   // left[j]† right[l] = δ_jl
};

namespace detail {

// Null vector of (M - λ I), chosen from whichever row gives the larger candidate.
inline Vec2 null_vector(const Complex2Matrix& x, cplx lambda) {
    const Vec2 c1{x(0, 1), lambda - x(0, 0)};
    const Vec2 c2{lambda - x(1, 1), x(1, 0)};
    Vec2 v = norm(c1) >= norm(c2) ? c1 : c2;
    const double n = norm(v);
    if (n == 0.0) {
        throw DegenerateSpectrumError("numerics", "eig2: no eigenvector could be isolated");
    }
    v *= cplx(1.0 / n, 0.0);
    // Canonical phase: the largest-magnitude component is real and positive.
    const cplx pivot = std::abs(v.a) >= std::abs(v.b) ? v.a : v.b;
    v *= std::conj(pivot) / std::abs(pivot);
    return v;
}

}  // namespace detail

inline Eig2 eig2(const Complex2Matrix& x) {
    if (!x.finite()) {
        throw PreconditionError("numerics", "eig2: non-finite matrix entry");
    }
    const double scale = x.norm();
    const cplx s = 0.5 * x.trace();
    const cplx d = x.det();
    const cplx r = std::sqrt(s * s - d);
    // Larger-magnitude root first, smaller by Vieta to avoid cancellation.
    const cplx plus = s + r;
    const cplx minus = s - r;
    cplx la = plus;
    cplx lb = minus;
    if (std::abs(plus) >= std::abs(minus)) {
        if (plus != cplx(0.0)) lb = d / plus;
    } else {
        la = d / minus;
    }
    if (!(std::abs(la - lb) >= 1e-8 * scale) || scale == 0.0) {
        throw DegenerateSpectrumError("numerics", "eig2: eigenvalues not separated");
    }
    Eig2 out;
    out.values = {la, lb};
    const Complex2Matrix adj = x.adjoint();
    for (std::size_t j = 0; j < 2; ++j) {
        out.right[j] = detail::null_vector(x, out.values[j]);
        Vec2 w = detail::null_vector(adj, std::conj(out.values[j]));
        const cplx overlap = dot(w, out.right[j]);
        w *= 1.0 / std::conj(overlap);
        out.left[j] = w;
    }
    return out;
}

// Principal matrix logarithm via eigendecomposition.
inline Complex2Matrix principal_log2(const Complex2Matrix& x) {
    const double scale = x.norm();
    auto checked_log = [&](cplx z) {
        if (std::abs(z) == 0.0) {
            throw PreconditionError("numerics", "principal_log2: singular matrix");
        }
        if (z.real() < 0.0 && std::abs(z.imag()) <= 1e-10 * std::max(1.0, std::abs(z))) {
            throw BranchCutError("numerics", "principal_log2: eigenvalue on the negative real axis");
        }
        return std::log(z);
    };
    // Scalar matrices are diagonalizable despite the repeated eigenvalue.
    if (std::abs(x(0, 1)) <= 1e-14 * scale && std::abs(x(1, 0)) <= 1e-14 * scale &&
        std::abs(x(0, 0) - x(1, 1)) <= 1e-14 * scale) {
        return checked_log(x(0, 0)) * Complex2Matrix::identity();
    }
    const Eig2 e = eig2(x);
    Complex2Matrix out{};
    for (std::size_t j = 0; j < 2; ++j) {
        out += checked_log(e.values[j]) * outer(e.right[j], conj(e.left[j]));
    }
    return out;
}

// ------------------------------------------------------ special functions

// Associated Laguerre polynomial L_n^k(x) by the three-term recurrence.
inline double laguerre(unsigned n, double k, double x) noexcept {
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = 1.0 + k - x;
    for (unsigned j = 1; j < n; ++j) {
        const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

// ------------------------------------------------------- random streams

// Reproducible standard-normal stream. Distinct (seed, stream_id) pairs seed
// independent engines, so each consumer owns its own stream by value.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed, std::uint64_t stream_id = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    double operator()() { return normal_(engine_); }

    void fill(std::span<double> out) {
        for (double& v : out) v = normal_(engine_);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// One step's worth of the three independent white noises. Each real scalar has
// variance 1/dt; the complex ξ has ⟨|ξ|²⟩ = 1/dt.
struct NoiseDraw {
    double eta = 0.0;
    double eta_plus = 0.0;
    cplx xi{};
    double dt = 1.0;
};

inline NoiseDraw draw_noise(GaussianStream& stream, double dt) {
    const double s = 1.0 / std::sqrt(dt);
    NoiseDraw n;
    n.dt = dt;
    n.eta = s * stream();
    n.eta_plus = s * stream();
    const double re = stream();
    const double im = stream();
    n.xi = cplx(re, im) * (s * std::numbers::sqrt2 / 2.0);
    return n;
}

// ---------------------------------------------------------- ODE stepping

template <std::size_t N>
using CState = std::array<cplx, N>;

// One classical RK4 step of y' = rhs(t, y) for a fixed-size complex state.
template <std::size_t N, class Rhs>
CState<N> rk4_step(const Rhs& rhs, double t, const CState<N>& y, double h) {
    auto axpy = [](const CState<N>& base, double a, const CState<N>& k) {
        CState<N> out;
        for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + a * k[i];
        return out;
    };
    const CState<N> k1 = rhs(t, y);
    const CState<N> k2 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const CState<N> k3 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const CState<N> k4 = rhs(t + h, axpy(y, h, k3));
    CState<N> out;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

inline bool all_finite(std::span<const cplx> y) noexcept {
    return std::all_of(y.begin(), y.end(), [](cplx z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

struct OdeTrajectory {
    std::vector<double> t;
    std::vector<std::vector<cplx>> y;
};

// Fixed-step RK4 from t0 to t1. Samples at t0 + k dt; the final partial step
// lands exactly on t1. `rhs(t, y)` returns dy/dt as std::vector<cplx>.
template <class Rhs>
OdeTrajectory integrate_ode(const Rhs& rhs, std::vector<cplx> y0, double t0, double t1, double dt) {
    if (!(dt > 0.0) || !(t1 > t0)) {
        throw PreconditionError("numerics", "integrate_ode: require dt > 0 and t1 > t0");
    }
    const std::size_t n = y0.size();
    OdeTrajectory out;
    out.t.push_back(t0);
    out.y.push_back(y0);
    std::vector<cplx> y = std::move(y0);
    std::vector<cplx> tmp(n);
    const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-12));
    auto step = [&](double t, double h) {
        const std::vector<cplx> k1 = rhs(t, y);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        const std::vector<cplx> k2 = rhs(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        const std::vector<cplx> k3 = rhs(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        const std::vector<cplx> k4 = rhs(t + h, tmp);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (!all_finite(y)) {
            throw DivergenceError("numerics", "integrate_ode: non-finite state at t = " + std::to_string(t + h));
        }
    };
    double t = t0;
    for (std::size_t k = 0; k < steps; ++k) {
        t = t0 + static_cast<double>(k) * dt;
        step(t, dt);
        t = t0 + static_cast<double>(k + 1) * dt;
        out.t.push_back(t);
        out.y.push_back(y);
    }
    const double rest = t1 - t;
    if (rest > 1e-12 * dt) {
        step(t, rest);
        out.t.push_back(t1);
        out.y.push_back(y);
    } else {
        out.t.back() = t1;
    }
    return out;
}

// ------------------------------------------------------ dense matrices

// Square complex matrix, row-major. Hosts truncated-Fock density matrices.
class DenseComplexMatrix {
public:
    DenseComplexMatrix() = default;
    explicit DenseComplexMatrix(std::size_t n) : n_(n), data_(n * n) {
        if (n == 0) throw PreconditionError("numerics", "DenseComplexMatrix: dimension must be > 0");
    }

    static DenseComplexMatrix identity(std::size_t n) {
        DenseComplexMatrix out(n);
        for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
        return out;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return n_; }
    cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
    [[nodiscard]] std::span<cplx> data() noexcept { return data_; }
    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }

    [[nodiscard]] cplx trace() const noexcept {
        cplx t{};
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }
    [[nodiscard]] double frobenius_norm() const noexcept {
        double s = 0.0;
        for (const cplx& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }
    [[nodiscard]] DenseComplexMatrix adjoint() const {
        DenseComplexMatrix out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out(i, j) = std::conj((*this)(j, i));
        return out;
    }
    [[nodiscard]] double hermiticity_error() const noexcept {
        double e = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < n_; ++j)
                e = std::max(e, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return e;
    }
    [[nodiscard]] bool is_hermitian(double tol = 1e-12) const noexcept { return hermiticity_error() <= tol; }

    // Optional flag; when set, the matrix is checked to be Hermitian within 1e-12.
    void mark_hermitian() {
        if (!is_hermitian(1e-12)) {
            throw PreconditionError("numerics", "mark_hermitian: matrix is not Hermitian");
        }
        hermitian_ = true;
    }
    [[nodiscard]] bool hermitian_flag() const noexcept { return hermitian_; }

    DenseComplexMatrix& operator+=(const DenseComplexMatrix& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    DenseComplexMatrix& operator-=(const DenseComplexMatrix& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    DenseComplexMatrix& operator*=(cplx s) noexcept {
        for (cplx& z : data_) z *= s;
        return *this;
    }

    friend DenseComplexMatrix operator*(const DenseComplexMatrix& x, const DenseComplexMatrix& y) {
        x.check_same(y);
        const std::size_t n = x.n_;
        DenseComplexMatrix out(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const cplx xik = x(i, k);
                if (xik == cplx(0.0)) continue;
                for (std::size_t j = 0; j < n; ++j) out(i, j) += xik * y(k, j);
            }
        return out;
    }

private:
    void check_same(const DenseComplexMatrix& o) const {
        if (o.n_ != n_) throw DimensionMismatchError("numerics", "matrix dimensions differ");
    }

    std::size_t n_ = 0;
    std::vector<cplx> data_;
    bool hermitian_ = false;
};

// ------------------------------------------------- periodic sample utilities

// 4-point Lagrange interpolation of uniformly spaced T-periodic samples.
template <class T>
T periodic_interp(std::span<const T> samples, double period, double t) {
    const auto n = static_cast<long>(samples.size());
    const double h = period / static_cast<double>(n);
    double u = t / h;
    double base = std::floor(u);
    const double f = u - base;
    long i0 = static_cast<long>(base) % n;
    if (i0 < 0) i0 += n;
    auto at = [&](long k) -> const T& { return samples[static_cast<std::size_t>(((k % n) + n) % n)]; };
    if (f == 0.0) return at(i0);
    const double wm = -f * (f - 1.0) * (f - 2.0) / 6.0;
    const double w0 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    const double w1 = -(f + 1.0) * f * (f - 2.0) / 2.0;
    const double w2 = (f + 1.0) * f * (f - 1.0) / 6.0;
    return wm * at(i0 - 1) + w0 * at(i0) + w1 * at(i0 + 1) + w2 * at(i0 + 2);
}

// Running integral ∫_0^{τ_k} g of uniformly sampled T-periodic real data,
// evaluated spectrally (exact for band-limited g). Returns n values.
inline std::vector<double> periodic_antiderivative(std::span<const double> g, double period) {
    const std::size_t n = g.size();
    const double omega = 2.0 * std::numbers::pi / period;
    std::vector<cplx> coeff(n);
    for (std::size_t m = 0; m < n; ++m) {
        cplx acc{};
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((m * k) % n) / static_cast<double>(n);
            acc += g[k] * cplx(std::cos(ang), std::sin(ang));
        }
        coeff[m] = acc / static_cast<double>(n);
    }
    std::vector<double> out(n, 0.0);
    const double mean = coeff[0].real();
    for (std::size_t k = 0; k < n; ++k) {
        const double tau = period * static_cast<double>(k) / static_cast<double>(n);
        cplx acc = mean * tau;
        for (std::size_t m = 1; m < n; ++m) {
            // Symmetric frequency assignment; the Nyquist term integrates as a cosine.
            long freq = static_cast<long>(m);
            if (2 * m > n) freq -= static_cast<long>(n);
            if (2 * m == n) {
                acc += coeff[m] * std::sin(omega * static_cast<double>(freq) * tau) / (omega * static_cast<double>(freq));
                continue;
            }
            const cplx iw = kI * (omega * static_cast<double>(freq));
            acc += coeff[m] * (std::exp(iw * tau) - 1.0) / iw;
        }
        out[k] = acc.real();
    }
    return out;
}

// Mean of uniformly sampled periodic data (trapezoid rule on the closed loop).
template <class T>
T periodic_mean(std::span<const T> samples) {
    T acc{};
    for (const T& s : samples) acc += s;
    return acc / static_cast<double>(samples.size());
}

}  // namespace floqlin

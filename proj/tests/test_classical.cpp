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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "floqlin/classical.hpp"

using namespace floqlin;
using floqlin::fixtures::kDelta;
using floqlin::fixtures::kDriveF;

namespace {

double cubic(double I, double F, double Delta) {
    return (Delta * Delta + 1.0) * I - 2.0 * I * I + I * I * I - F * F;
}

// Sixth-order central difference on the periodic sample grid.
cplx spectral_free_derivative(const LimitCycle& c, std::size_t k) {
    const std::size_t n = c.ngrid();
    auto at = [&](int d) { return c.samples[(k + n + static_cast<std::size_t>(d + 3) - 3) % n]; };
    const double h = c.step();
    return (-at(-3) + 9.0 * at(-2) - 45.0 * at(-1) + 45.0 * at(1) - 9.0 * at(2) + at(3)) / (60.0 * h);
}

// Distance from a point to the closed curve traced by a cycle: a coarse scan
// of the interpolated curve, then golden-section refinement of the best bracket.
double distance_to_orbit(const LimitCycle& c, cplx z) {
    const std::size_t fine = 16 * c.ngrid();
    const double dt = c.period / static_cast<double>(fine);
    auto dist = [&](double t) { return std::abs(periodic_interp<cplx>(c.samples, c.period, t) - z); };
    double best_t = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < fine; ++j) {
        const double t = dt * static_cast<double>(j);
        if (const double d = dist(t); d < best) {
            best = d;
            best_t = t;
        }
    }
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best_t - dt, hi = best_t + dt;
    for (int it = 0; it < 60; ++it) {
        const double m1 = hi - g * (hi - lo);
        const double m2 = lo + g * (hi - lo);
        (dist(m1) < dist(m2) ? hi : lo) = dist(m1) < dist(m2) ? m2 : m1;
    }
    return std::min(best, dist(0.5 * (lo + hi)));
}

void stable_of(const BifurcationRow& r, std::vector<StationaryState>& out) {
    out.clear();
    for (const auto& s : r.states)
        if (s.stable) out.push_back(s);
}

// Drive at which the stationary intensity equals 1/2.
double hopf_F2(double Delta2) { return 0.5 * (Delta2 + 0.25); }

}  // namespace

TEST(Drift, Examples) {
    const ModelParams p{0.7, 0.3, 0.1};
    EXPECT_EQ(drift(0.0, p), cplx(0.7, 0.0));
    EXPECT_EQ(drift(1.0, ModelParams{0.0, 0.0, 0.1}), cplx(0.0));
    for (double phi : {0.0, 0.4, 2.0, -1.3}) {
        const cplx b = std::polar(1.0, phi);
        EXPECT_LT(std::abs(drift(b, ModelParams{0.0, 0.3, 0.1}) - kI * 0.3 * b), 1e-15);
    }
}

TEST(StationaryIntensities, DoubleRootAtResonantTurningPoint) {
    const auto r = stationary_intensities(std::sqrt(4.0 / 27.0), 0.0);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_NEAR(r[0], 1.0 / 3.0, 1e-7);
    EXPECT_NEAR(r[1], 1.0 / 3.0, 1e-7);
    EXPECT_NEAR(r[2], 4.0 / 3.0, 1e-12);
}

TEST(StationaryIntensities, UndrivenRoots) {
    const auto r0 = stationary_intensities(0.0, 0.0);
    ASSERT_EQ(r0.size(), 3u);
    EXPECT_NEAR(r0[0], 0.0, 1e-12);
    EXPECT_NEAR(r0[1], 1.0, 1e-7);
    EXPECT_NEAR(r0[2], 1.0, 1e-7);
    for (double d : {0.2, 0.7, 1.5}) {
        const auto r = stationary_intensities(0.0, d);
        ASSERT_FALSE(r.empty());
        EXPECT_NEAR(r.front(), 0.0, 1e-12);
    }
}

TEST(StationaryIntensities, SingleRootBeyondCoalescence) {
    for (double f2 = 0.0; f2 <= 2.0; f2 += 0.01) {
        EXPECT_EQ(stationary_intensities(std::sqrt(f2), std::sqrt(0.4)).size(), 1u) << "F2=" << f2;
    }
}

TEST(StationaryIntensities, ResidualsOnAParameterSweep) {
    for (double d2 = 0.0; d2 <= 0.5; d2 += 0.025) {
        for (double f2 = 0.0; f2 <= 1.0; f2 += 0.01) {
            const double F = std::sqrt(f2);
            const double D = std::sqrt(d2);
            const auto roots = stationary_intensities(F, D);
            ASSERT_TRUE(roots.size() == 1 || roots.size() == 3);
            ASSERT_TRUE(std::is_sorted(roots.begin(), roots.end()));
            for (double I : roots) {
                EXPECT_GE(I, 0.0);
                EXPECT_LT(std::abs(cubic(I, F, D)), 1e-10) << "F2=" << f2 << " D2=" << d2 << " I=" << I;
            }
        }
    }
}

TEST(StationaryIntensities, NegativeDriveRejected) {
    EXPECT_THROW(stationary_intensities(-0.1, 0.2), PreconditionError);
}

TEST(StationaryStates, AmplitudesZeroTheDrift) {
    for (double f2 : {0.05, 0.2, 0.275, 0.6}) {
        const ModelParams p{std::sqrt(f2), std::sqrt(0.3), 0.1};
        for (const auto& s : stationary_states(p)) {
            EXPECT_LT(std::abs(drift(s.amplitude(), p)), 1e-9);
            EXPECT_GE(s.phi, 0.0);
            EXPECT_LT(s.phi, 2.0 * std::numbers::pi);
            EXPECT_EQ(s.damping == DampingClass::Underdamped, s.I * s.I < p.Delta * p.Delta);
        }
    }
}

TEST(StabilityEigenvalues, Examples) {
    auto [a, b] = stability_eigenvalues(1.0, 0.0);
    EXPECT_LT(std::abs(a - 0.0), 1e-15);
    EXPECT_LT(std::abs(b + 2.0), 1e-15);
    std::tie(a, b) = stability_eigenvalues(0.5, 1.0);
    EXPECT_LT(std::abs(a - kI * (std::sqrt(3.0) / 2.0)), 1e-15);
    EXPECT_LT(std::abs(b + kI * (std::sqrt(3.0) / 2.0)), 1e-15);
    std::tie(a, b) = stability_eigenvalues(0.5, 0.5);
    EXPECT_LT(std::abs(a), 1e-15);
    EXPECT_LT(std::abs(b), 1e-15);
    std::tie(a, b) = stability_eigenvalues(0.8, -0.8);
    EXPECT_LT(std::abs(a - (1.0 - 1.6)), 1e-15);
    EXPECT_LT(std::abs(a - b), 1e-15);
}

TEST(StabilityEigenvalues, ConjugatePairExactlyWhenUnderdamped) {
    for (double I = 0.0; I < 2.0; I += 0.037) {
        for (double D : {0.1, 0.6, 1.3}) {
            const auto [a, b] = stability_eigenvalues(I, D);
            if (I * I < D * D) {
                EXPECT_GT(std::abs(a.imag()), 0.0);
                EXPECT_LT(std::abs(a - std::conj(b)), 1e-15);
            } else {
                EXPECT_EQ(a.imag(), 0.0);
                EXPECT_EQ(b.imag(), 0.0);
            }
        }
    }
}

TEST(TurningPoints, Examples) {
    const auto t0 = turning_points(0.0);
    ASSERT_TRUE(t0.has_value());
    EXPECT_NEAR(t0->I_plus, 1.0, 1e-15);
    EXPECT_NEAR(t0->I_minus, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(t0->F2_plus, 0.0, 1e-15);
    EXPECT_NEAR(t0->F2_minus, 4.0 / 27.0, 1e-15);
    EXPECT_FALSE(turning_points(std::sqrt(0.5)).has_value());
}

TEST(TurningPoints, CoalesceAtOneThird) {
    const auto t = turning_points(std::sqrt(1.0 / 3.0));
    ASSERT_TRUE(t.has_value());
    EXPECT_NEAR(t->I_plus, 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(t->I_minus, 2.0 / 3.0, 1e-10);
    // Slightly beyond, they are gone.
    EXPECT_FALSE(turning_points(std::sqrt(1.0 / 3.0 + 1e-6)).has_value());
}

TEST(TurningPoints, AreCriticalPointsOfTheResponseCurve) {
    for (double d2 = 0.0; d2 < 1.0 / 3.0; d2 += 0.01) {
        const auto t = turning_points(std::sqrt(d2));
        ASSERT_TRUE(t.has_value());
        for (double I : {t->I_plus, t->I_minus}) {
            EXPECT_NEAR((d2 + 1.0) - 4.0 * I + 3.0 * I * I, 0.0, 1e-12);
        }
        EXPECT_NEAR(t->F2_plus, cubic(t->I_plus, 0.0, std::sqrt(d2)), 1e-12);
        EXPECT_NEAR(t->F2_minus, cubic(t->I_minus, 0.0, std::sqrt(d2)), 1e-12);
    }
}

TEST(Classify, Examples) {
    EXPECT_EQ(classify(1.2, 0.1).label, RegionLabel::StableOverdamped);
    EXPECT_EQ(classify(0.8, 1.0).label, RegionLabel::StableUnderdamped);
    EXPECT_EQ(classify(0.3, 1.0).label, RegionLabel::UnstableHopfSide);
    EXPECT_EQ(classify(0.5, 0.1).label, RegionLabel::UnstableStatic);
}

TEST(Classify, HopfLineSeparatesStableFromUnstableOnTheComplexSide) {
    for (double D : {0.6, 0.8, 1.0}) {
        EXPECT_EQ(classify(0.5 - 1e-9, D).label, RegionLabel::UnstableHopfSide);
        EXPECT_EQ(classify(0.5 + 1e-9, D).label, RegionLabel::StableUnderdamped);
        const auto [a, b] = stability_eigenvalues(0.5, D);
        EXPECT_NEAR(a.real(), 0.0, 1e-15);
        EXPECT_GT(std::abs(a.imag()), 0.0);
    }
}

TEST(Classify, DampingIdentityOnADenseGrid) {
    const int n = 100;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double I = 2.0 * i / (n - 1);
            const double d2 = 1.0 * j / (n - 1);
            const double D = std::sqrt(d2);
            const PhaseDamping pd = phase_damping(I, D);
            const double lhs = pd.Gamma * pd.Gamma - 4.0 * pd.Omega2;
            EXPECT_NEAR(lhs, 4.0 * (I * I - d2), 1e-12);
            const auto region = classify(I, D);
            const bool stable = region.label == RegionLabel::StableOverdamped ||
                                region.label == RegionLabel::StableUnderdamped;
            const auto [a, b] = stability_eigenvalues(I, D);
            EXPECT_EQ(stable, std::max(a.real(), b.real()) < 0.0);
            if (stable) {
                EXPECT_EQ(region.label == RegionLabel::StableUnderdamped, lhs < 0.0);
            }
            EXPECT_NEAR(region.to_hb, I - 0.5, 1e-15);
            EXPECT_NEAR(region.to_up, I - D, 1e-15);
        }
    }
}

TEST(LimitCycle, FreeRunningCycleIsTheUnitCircle) {
    const LimitCycle c = find_limit_cycle(fixtures::free_params());
    EXPECT_NEAR(c.period, 2.0 * std::numbers::pi / kDelta, 1e-6);
    EXPECT_EQ(c.ngrid(), 1024u);
    for (cplx b : c.samples) ASSERT_NEAR(std::abs(b), 1.0, 1e-6);
    EXPECT_LT(c.closure_residual, 1e-8);
    EXPECT_NEAR(c.mean_intensity, 1.0, 1e-6);
}

TEST(LimitCycle, DrivenCycleSatisfiesTheOde) {
    const LimitCycle c = find_limit_cycle(fixtures::driven_params());
    EXPECT_LT(c.closure_residual, 1e-8);
    double rmin = 1e9, rmax = 0.0;
    for (std::size_t k = 0; k < c.ngrid(); ++k) {
        rmin = std::min(rmin, std::abs(c.samples[k]));
        rmax = std::max(rmax, std::abs(c.samples[k]));
        const cplx numeric = spectral_free_derivative(c, k);
        ASSERT_LT(std::abs(numeric - drift(c.samples[k], c.params)), 1e-6) << "k=" << k;
        ASSERT_LT(std::abs(c.derivatives[k] - drift(c.samples[k], c.params)), 1e-12);
    }
    // A genuinely non-circular orbit.
    EXPECT_GT(rmax - rmin, 0.3);
    EXPECT_TRUE(std::isfinite(c.mean_intensity));
}

TEST(LimitCycle, RestartFromADifferentSectionGivesTheSameOrbit) {
    const LimitCycle a = find_limit_cycle(fixtures::driven_params());
    CycleOptions opts;
    opts.transient_time = 73.3;
    opts.initial = cplx(-0.4, 0.9);
    const LimitCycle b = find_limit_cycle(fixtures::driven_params(), opts);
    EXPECT_NEAR(a.period, b.period, 1e-8);
    EXPECT_GT(std::abs(a.samples[0] - b.samples[0]), 1e-3);
    for (std::size_t k = 0; k < b.ngrid(); k += 37) {
        EXPECT_LT(distance_to_orbit(a, b.samples[k]), 1e-6);
    }
}

TEST(LimitCycle, ResonantDriveSynchronizes) {
    EXPECT_THROW(find_limit_cycle(ModelParams{1.0, 0.0, 0.1}), NoLimitCycleError);
}

TEST(Bifurcation, ResonantScanHasOnlyTheUpperBranchStable) {
    const auto rows = bifurcation_scan(0.0, 0.01, 0.5, 50);
    double last = 1.0;
    std::vector<StationaryState> st;
    for (const auto& r : rows) {
        stable_of(r, st);
        ASSERT_EQ(st.size(), 1u) << "F2=" << r.F2;
        EXPECT_GT(st[0].I, last);
        EXPECT_EQ(st[0].I, r.states.back().I);
        EXPECT_EQ(st[0].damping, DampingClass::Overdamped);
        last = st[0].I;
        EXPECT_EQ(r.states.size(), r.F2 < 4.0 / 27.0 ? 3u : 1u);
        EXPECT_FALSE(r.cycle_mean_intensity.has_value());
    }
}

TEST(Bifurcation, SmallDetuningNeedsAMinimumDrive) {
    const double d2 = 0.2;
    const auto tp = turning_points(std::sqrt(d2));
    ASSERT_TRUE(tp.has_value());
    EXPECT_LT(tp->I_minus, 0.5);  // the lower branch never stabilizes
    const auto rows = bifurcation_scan(std::sqrt(d2), 0.0, 0.4, 41);
    std::vector<StationaryState> st;
    for (const auto& r : rows) {
        stable_of(r, st);
        const bool folded = r.F2 > tp->F2_plus && r.F2 < tp->F2_minus;
        EXPECT_EQ(r.states.size(), folded ? 3u : 1u) << "F2=" << r.F2;
        if (r.F2 > tp->F2_plus) {
            ASSERT_EQ(st.size(), 1u) << "F2=" << r.F2;
            EXPECT_GE(st[0].I, tp->I_plus);
        } else {
            EXPECT_TRUE(st.empty());
        }
        if (r.F2 < tp->F2_plus - 0.02) {
            EXPECT_EQ(r.cycle_status, "cycle") << "F2=" << r.F2;
        }
        if (r.F2 > tp->F2_plus) {
            EXPECT_FALSE(r.cycle_mean_intensity.has_value());
        }
    }
    // The cycle period grows without bound as the upper turning point is approached.
    const auto near = bifurcation_scan(std::sqrt(d2), tp->F2_plus - 0.04, tp->F2_plus - 0.002, 3);
    ASSERT_TRUE(near.back().cycle_period.has_value());
    EXPECT_GT(*near.back().cycle_period, 2.0 * *near.front().cycle_period);
}

TEST(Bifurcation, IntermediateDetuningStabilizesAPieceOfTheLowerBranch) {
    const double d2 = 0.3;
    const double D = std::sqrt(d2);
    const auto tp = turning_points(D);
    ASSERT_TRUE(tp.has_value());
    ASSERT_GT(tp->I_minus, 0.5);
    const double f2_hb = hopf_F2(d2);
    EXPECT_GT(f2_hb, tp->F2_plus);
    EXPECT_LT(f2_hb, tp->F2_minus);
    const auto rows = bifurcation_scan(D, 0.27, 0.28, 40);
    std::vector<StationaryState> st;
    int window = 0;
    for (const auto& r : rows) {
        stable_of(r, st);
        const bool lower_stable = std::any_of(st.begin(), st.end(), [&](const StationaryState& s) {
            return s.I > 0.5 && s.I < tp->I_minus;
        });
        const bool expected = r.F2 > f2_hb && r.F2 < tp->F2_minus;
        EXPECT_EQ(lower_stable, expected) << "F2=" << r.F2;
        if (lower_stable) {
            ++window;
            // Coexists with the stable upper branch.
            EXPECT_EQ(st.size(), 2u);
            for (const auto& s : st) {
                if (s.I < D) {
                    EXPECT_EQ(s.damping, DampingClass::Underdamped);
                }
            }
        }
    }
    EXPECT_GE(window, 3);
}

TEST(Bifurcation, CoalescedTurningPointsGiveAMonotoneResponse) {
    const double d2 = 1.0 / 3.0;
    const auto rows = bifurcation_scan(std::sqrt(d2), 0.0, 0.6, 31);
    double last = -1.0;
    std::vector<StationaryState> st;
    for (const auto& r : rows) {
        ASSERT_EQ(r.states.size(), 1u) << "F2=" << r.F2;
        EXPECT_GT(r.states[0].I, last);
        last = r.states[0].I;
        stable_of(r, st);
        if (r.states[0].I < 0.5) {
            EXPECT_TRUE(st.empty());
            EXPECT_EQ(r.cycle_status, "cycle") << "F2=" << r.F2;
        } else if (std::abs(r.states[0].I - 2.0 / 3.0) > 1e-3) {
            EXPECT_EQ(st.size(), 1u);
        }
    }
}

TEST(Bifurcation, LargeDetuningCycleShrinksIntoTheHopfPoint) {
    const double d2 = 0.4;
    const double f2_hb = hopf_F2(d2);
    const auto rows = bifurcation_scan(std::sqrt(d2), 0.0, 0.5, 26);
    for (const auto& r : rows) {
        ASSERT_EQ(r.states.size(), 1u);
        EXPECT_EQ(r.states[0].stable, r.states[0].I > 0.5);
        if (r.F2 < f2_hb) {
            EXPECT_EQ(r.cycle_status, "cycle") << "F2=" << r.F2;
        }
        if (r.F2 > f2_hb) {
            EXPECT_FALSE(r.cycle_mean_intensity.has_value());
        }
    }
    // Supercritical Hopf: the squared amplitude vanishes linearly at the Hopf drive.
    double last = 1e9;
    std::vector<double> ratio;
    for (double dist : {0.004, 0.002, 0.001, 0.0005}) {
        const LimitCycle c = find_limit_cycle(ModelParams{std::sqrt(f2_hb - dist), std::sqrt(d2), 1.0});
        EXPECT_LT(c.amplitude, last);
        last = c.amplitude;
        ratio.push_back(c.amplitude * c.amplitude / dist);
    }
    EXPECT_LT(std::abs(ratio[3] / ratio[2] - 1.0), 0.1);
    EXPECT_LT(ratio[3], ratio[0]);
}

TEST(Bifurcation, CycleBranchEndsWhereTheStableBranchCrossesHalf) {
    // With Δ² > 1/3 the default start finds the Hopf-connected cycle; for
    // 1/4 < Δ² < 1/3 that cycle coexists with the upper branch and is reached
    // by starting next to the lower stationary point. Relaxation onto a
    // small cycle slows down near the Hopf point, hence the long transient.
    for (double d2 : {0.3, 0.4, 0.5}) {
        const double D = std::sqrt(d2);
        const double f2_hb = hopf_F2(d2);
        const double step = 0.0005;
        double last_cycle = -1.0;
        double first_stable = -1.0;
        for (int i = -6; i <= 6; ++i) {
            const double f2 = f2_hb + (i + 0.5) * step;
            const ModelParams p{std::sqrt(f2), D, 1.0};
            const auto states = stationary_states(p);
            const StationaryState& lower = states.front();
            if (lower.stable && first_stable < 0.0) first_stable = f2;
            CycleOptions opts;
            opts.initial = lower.amplitude() * 1.01;
            opts.transient_time = 1000.0;
            try {
                find_limit_cycle(p, opts);
                last_cycle = f2;
            } catch (const Error&) {
            }
        }
        EXPECT_NEAR(last_cycle, f2_hb, step) << "D2=" << d2;
        EXPECT_NEAR(first_stable, f2_hb, step) << "D2=" << d2;
    }
}

TEST(PhaseDiagram, GridLayoutAndLabels) {
    const auto cells = phase_diagram(2.0, 1.0, 50);
    ASSERT_EQ(cells.size(), 2500u);
    EXPECT_EQ(cells.front().I, 0.0);
    EXPECT_EQ(cells.back().I, 2.0);
    EXPECT_EQ(cells.back().Delta2, 1.0);
    for (const auto& c : cells) {
        EXPECT_EQ(c.region.label, classify(c.I, std::sqrt(c.Delta2)).label);
    }
    EXPECT_THROW(phase_diagram(2.0, 1.0, 1), PreconditionError);
}

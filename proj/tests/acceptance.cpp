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


// Acceptance driver: one PASS/FAIL line per criterion. Usage:
//   acceptance [--criterion N] [--long]
// Criterion 5 is long-running and only runs with --long or FLOQLIN_LONG=1;
// otherwise it reports SKIP and exits with kSkip.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "floqlin/cli.hpp"
#include "floqlin/floqlin.hpp"

using namespace floqlin;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

class Checker {
public:
    void check(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream s;
        s.precision(12);
        s << what << ": got " << got << ", want " << want << " +- " << tol;
        check(std::abs(got - want) <= tol, s.str());
    }
    void note(const std::string& text) { notes_.push_back(text); }

    [[nodiscard]] bool passed() const { return failed_ == 0; }
    [[nodiscard]] std::string summary() const {
        std::ostringstream s;
        s << total_ - failed_ << "/" << total_ << " checks";
        for (const auto& n : notes_) s << "; " << n;
        for (const auto& f : failures_) s << "\n    failed: " << f;
        return s.str();
    }

private:
    int total_ = 0;
    int failed_ = 0;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

const double kDelta = std::sqrt(0.4);
const double kF = std::sqrt(0.1);

// Runs one CLI subcommand into a scratch directory and returns its metadata.
cli::json run_cli(const std::string& tag, std::vector<std::string> args) {
    const fs::path dir = fs::temp_directory_path() / ("floqlin_acceptance_" + tag);
    fs::remove_all(dir);
    args.insert(args.begin(), "floqlin");
    args.push_back("--out");
    args.push_back(dir.string());
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    const fs::path meta = dir / (args[1] + ".json");
    cli::json m = fs::exists(meta) ? cli::json::parse(io::read_file(meta)) : cli::json::object();
    m["exit_code"] = code;
    m["stderr"] = err.str();
    fs::remove_all(dir);
    return m;
}

void criterion1(Checker& c) {
    const LimitCycle cyc = find_limit_cycle(ModelParams{0.0, kDelta, 0.1});
    c.near(cyc.period, 2.0 * std::numbers::pi / kDelta, 1e-6, "period");
    double radius = 0.0;
    for (cplx b : cyc.samples) radius = std::max(radius, std::abs(std::abs(b) - 1.0));
    c.near(radius, 0.0, 1e-6, "max ||beta|-1|");
    const FloquetSystem s = build_floquet(cyc);
    c.near(std::abs(s.eigen.mu0), 0.0, 1e-8, "|mu0|");
    c.near(std::abs(s.eigen.mu1 - cplx(-2.0, 0.0)), 0.0, 1e-6, "|mu1 + 2|");
    const auto k0 = theta_kernel(s);
    const auto C = c_kernel(s);
    double dk = 0.0, dc = 0.0;
    for (std::size_t k = 0; k < k0.size(); ++k) {
        dk = std::max(dk, std::abs(k0[k] - 3.0 / (2.0 * kDelta * kDelta)));
        dc = std::max(dc, std::abs(C[k] - 0.125));
    }
    c.near(dk, 0.0, 1e-6, "max |theta kernel - 3.75|");
    c.near(dc, 0.0, 1e-6, "max |C - 0.125|");
    double dd = 0.0;
    for (std::size_t k = 0; k < s.ngrid(); ++k) dd = std::max(dd, std::abs(gaussian_moments(s, C, 0.1, cyc.tau(k)).det() - 1.5));
    c.near(dd, 0.0, 1e-6, "max |det V - 1.5| over all theta");
    c.note("T=" + num(cyc.period) + " mu1=" + num(s.eigen.mu1.real()));
}

void criterion2(Checker& c) {
    const FloquetSystem s = build_floquet(find_limit_cycle(ModelParams{kF, kDelta, 0.1}));
    c.near(std::abs(s.eigen.mu0), 0.0, 1e-7, "|mu0|");
    double tr = 0.0;
    for (cplx b : s.cycle.samples) tr += 2.0 - 4.0 * std::norm(b);
    tr /= static_cast<double>(s.ngrid());
    c.near(std::abs(s.eigen.mu0 + s.eigen.mu1 - tr), 0.0, 1e-6, "|mu0 + mu1 - <tr L>|");
    // Abel: det R(T) = exp(T <tr L>).
    const double abel = std::exp(s.period() * tr);
    c.near(std::abs(s.monodromy.det() - abel) / abel, 0.0, 1e-7, "Abel relative deviation");
    const std::vector<Vec2>* q[2] = {&s.q0, &s.q1};
    const std::vector<Vec2>* p[2] = {&s.p0, &s.p1};
    double ortho = 0.0;
    for (std::size_t k = 0; k < s.ngrid(); ++k)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) ortho = std::max(ortho, std::abs(dot((*q[j])[k], (*p[l])[k]) - (j == l ? 1.0 : 0.0)));
    c.near(ortho, 0.0, 1e-8, "max |q_j^dag p_l - delta_jl|");
    const auto qa = analytic_q1(s.cycle, kDelta, s.eigen.mu1);
    const cplx scale = dot(qa[0], s.q1[0]) / dot(qa[0], qa[0]);
    double dev = 0.0;
    for (std::size_t k = 0; k < qa.size(); ++k) dev = std::max(dev, norm(scale * qa[k] - s.q1[k]));
    c.near(dev, 0.0, 1e-5, "analytic q1 sup deviation");
    c.note("mu1=" + num(s.eigen.mu1.real()) + " ortho=" + num(ortho) + " q1dev=" + num(dev));
}

void criterion3(Checker& c) {
    // Turning-point coalescence, located by bisection on the existence of the fold.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (turning_points(std::sqrt(mid)).has_value() ? lo : hi) = mid;
    }
    c.near(0.5 * (lo + hi), 1.0 / 3.0, 1e-10, "turning-point coalescence Delta^2");

    for (double D : {0.55, 0.7, 1.0}) {
        c.check(classify(0.5 - 1e-9, D).label == RegionLabel::UnstableHopfSide, "unstable just below I=1/2");
        c.check(classify(0.5 + 1e-9, D).label == RegionLabel::StableUnderdamped, "stable just above I=1/2");
        const auto [a, b] = stability_eigenvalues(0.5, D);
        c.check(std::abs(a.real()) < 1e-15 && std::abs(a.imag()) > 0.0, "critical pair on the imaginary axis");
    }

    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
            const double I = 2.0 * i / 99.0, d2 = 1.0 * j / 99.0;
            const PhaseDamping pd = phase_damping(I, std::sqrt(d2));
            worst = std::max(worst, std::abs(pd.Gamma * pd.Gamma - 4.0 * pd.Omega2 - 4.0 * (I * I - d2)));
        }
    }
    c.near(worst, 0.0, 1e-12, "damping identity on 10^4 points");

    auto stable = [](const BifurcationRow& r) {
        std::vector<StationaryState> out;
        for (const auto& s : r.states)
            if (s.stable) out.push_back(s);
        return out;
    };
    auto hopf = [](double d2) { return 0.5 * (d2 + 0.25); };
    CycleOptions fast;
    fast.ngrid = 256;

    // Delta^2 = 0: S-curve, only the upper branch is stable, no cycle.
    for (const auto& r : bifurcation_scan(0.0, 0.01, 0.5, 25, fast)) {
        c.check(r.states.size() == (r.F2 < 4.0 / 27.0 ? 3u : 1u), "D2=0 branch count at F2=" + num(r.F2));
        c.check(stable(r).size() == 1 && stable(r)[0].I == r.states.back().I, "D2=0 upper branch stable at F2=" + num(r.F2));
        c.check(!r.cycle_mean_intensity, "D2=0 no cycle at F2=" + num(r.F2));
    }
    // Delta^2 = 0.2: cycle until near TP+, nothing stable below it.
    {
        const auto tp = *turning_points(std::sqrt(0.2));
        for (const auto& r : bifurcation_scan(std::sqrt(0.2), 0.0, 0.4, 21, fast)) {
            const bool folded = r.F2 > tp.F2_plus && r.F2 < tp.F2_minus;
            c.check(r.states.size() == (folded ? 3u : 1u), "D2=0.2 branch count at F2=" + num(r.F2));
            c.check(stable(r).size() == (r.F2 > tp.F2_plus ? 1u : 0u), "D2=0.2 stable count at F2=" + num(r.F2));
            if (r.F2 < tp.F2_plus - 0.02) c.check(r.cycle_status == "cycle", "D2=0.2 cycle at F2=" + num(r.F2));
            if (r.F2 > tp.F2_plus) c.check(!r.cycle_mean_intensity, "D2=0.2 no cycle at F2=" + num(r.F2));
        }
    }
    // Delta^2 = 0.3: a window of the lower branch between HB and TP- is stable.
    {
        const auto tp = *turning_points(std::sqrt(0.3));
        int window = 0;
        for (const auto& r : bifurcation_scan(std::sqrt(0.3), 0.27, 0.28, 40, fast)) {
            const auto st = stable(r);
            const bool lower = std::any_of(st.begin(), st.end(), [&](const StationaryState& s) { return s.I > 0.5 && s.I < tp.I_minus; });
            c.check(lower == (r.F2 > hopf(0.3) && r.F2 < tp.F2_minus), "D2=0.3 lower-branch stability at F2=" + num(r.F2));
            if (lower) {
                ++window;
                c.check(st.size() == 2u, "D2=0.3 bistability at F2=" + num(r.F2));
            }
        }
        c.check(window >= 3, "D2=0.3 stable lower-branch window present");
    }
    // Delta^2 = 1/3: monotone single branch, cycle while I < 1/2.
    {
        double last = -1.0;
        for (const auto& r : bifurcation_scan(std::sqrt(1.0 / 3.0), 0.0, 0.6, 31, fast)) {
            c.check(r.states.size() == 1u, "D2=1/3 single branch at F2=" + num(r.F2));
            if (r.states.empty()) continue;
            c.check(r.states[0].I > last, "D2=1/3 monotone at F2=" + num(r.F2));
            last = r.states[0].I;
            if (r.states[0].I < 0.5) c.check(stable(r).empty() && r.cycle_status == "cycle", "D2=1/3 cycle at F2=" + num(r.F2));
        }
    }
    // Delta^2 = 0.4: stable exactly above I = 1/2; cycle exactly below HB.
    for (const auto& r : bifurcation_scan(std::sqrt(0.4), 0.0, 0.5, 26, fast)) {
        c.check(r.states.size() == 1u && r.states[0].stable == (r.states[0].I > 0.5), "D2=0.4 stability at F2=" + num(r.F2));
        if (r.F2 < hopf(0.4)) c.check(r.cycle_status == "cycle", "D2=0.4 cycle at F2=" + num(r.F2));
        if (r.F2 > hopf(0.4)) c.check(!r.cycle_mean_intensity, "D2=0.4 no cycle at F2=" + num(r.F2));
    }
}

void compare_at(Checker& c, const std::string& tag, double gamma, std::vector<std::string> extra, double l1_max,
                bool check_argmax) {
    std::vector<std::string> args{"compare", "--gamma", num(gamma)};
    args.insert(args.end(), extra.begin(), extra.end());
    const cli::json m = run_cli(tag, args);
    c.check(m["exit_code"] == 0, "compare exit code " + m["exit_code"].dump() + " " + m["stderr"].get<std::string>());
    if (m["exit_code"] != 0) return;
    const auto& r = m["results"];
    c.check(r["grids"]["wigner_exact.pgm"]["nx"] == 201 && r["grids"]["wigner_exact.pgm"]["ny"] == 201, "201x201 grid");
    c.near(r["l1_relative"].get<double>(), 0.0, l1_max, "relative L1 distance");
    if (check_argmax) c.near(r["exact_max_cells_from_cycle"].get<double>(), 0.0, 2.0, "exact maximum distance from cycle (cells)");
    c.note("L1_rel=" + num(r["l1_relative"].get<double>()) +
           " argmax_cells=" + num(r["exact_max_cells_from_cycle"].get<double>()) +
           " n_max=" + r["oracle"]["n_max"].dump());
}

void criterion4(Checker& c) { compare_at(c, "c4", 0.1, {}, 0.15, true); }

void criterion5(Checker& c) {
    compare_at(c, "c5", 0.01, {"--n-max", "160", "--max-time", "20000"}, 0.05, false);
}

void criterion6(Checker& c) {
    const ModelParams p{kF, kDelta, 0.1};
    EnsembleOptions o;
    o.n_traj = 10000;
    const EnsembleStats st = simulate_ensemble(p, o);
    OracleParams op;
    op.model = p;
    const FockState rho = evolve_steady(op);
    for (auto [m, n] : {std::pair{1u, 1u}, std::pair{2u, 2u}}) {
        const auto [v, se] = st.quantum(*st.find(m, n));
        const cplx ref = expectation(rho, m, n);
        const double z = std::abs(v - ref) / se;
        const std::string tag = "<a+^" + std::to_string(m) + " a^" + std::to_string(n) + ">";
        c.check(z <= 3.0, tag + ": positive-P " + num(v.real()) + "+" + num(v.imag()) + "i (se " + num(se) +
                               "), oracle " + num(ref.real()) + ", z=" + num(z));
        c.note(tag + " z=" + num(z));
    }
}

void criterion7(Checker& c) {
    const FloquetSystem s = build_floquet(find_limit_cycle(ModelParams{kF, kDelta, 0.1}));
    ThetaSimOptions o;
    o.n_traj = 10000;
    const ThetaSimResult r = linearized_theta_sim(s, 0.1, o);
    const ThetaDiffusion td = theta_diffusion(s, 0.1);
    c.near(r.slope / td.slope - 1.0, 0.0, 0.05, "simulated / quadrature slope - 1");
    c.check(r.r_squared > 0.999, "R^2 = " + num(r.r_squared) + " > 0.999");
    c.note("slope=" + num(r.slope) + " quadrature=" + num(td.slope) + " R2=" + num(r.r_squared));
}

void criterion8(Checker& c) {
    for (const char* cmd : {"wigner-linearized", "wigner-exact"}) {
        for (const char* F : {"0", "sqrt:0.1"}) {
            const cli::json m = run_cli(std::string("c8_") + cmd, {cmd, "--F", F});
            c.check(m["exit_code"] == 0, std::string(cmd) + " exit code");
            if (m["exit_code"] != 0) continue;
            for (const auto& [name, g] : m["results"]["grids"].items()) {
                c.near(g["mass"].get<double>(), 1.0, 1e-3, std::string(cmd) + " F=" + F + " mass of " + name);
            }
        }
    }
    const FockState vac = fock_projector(20, 0);
    const QuadratureMoments q = quadrature_moments(vac);
    GridSpec spec;
    spec.auto_extend = false;
    const GridMoments g = grid_moments(exact_wigner(vac, spec));
    c.near(g.mass, 1.0, 1e-3, "vacuum grid mass");
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            c.near(q.covariance[i][j], i == j ? 1.0 : 0.0, 1e-3, "vacuum oracle covariance");
            c.near(g.covariance[i][j], i == j ? 1.0 : 0.0, 1e-3, "vacuum grid covariance");
        }
    }
}

struct Criterion {
    const char* title;
    double budget_s;
    std::function<void(Checker&)> body;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    bool want_long = false;
    if (const char* env = std::getenv("FLOQLIN_LONG")) want_long = std::string(env) == "1";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--long") {
            want_long = true;
        } else if (a == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N] [--long]\n";
            return 1;
        }
    }
    const std::vector<Criterion> all{
        {"analytic free-running suite", 10, criterion1},
        {"Floquet invariants on the driven cycle", 30, criterion2},
        {"phase diagram and bifurcation structure", 60, criterion3},
        {"linearized vs exact Wigner, gamma=0.1", 120, criterion4},
        {"linearized vs exact Wigner, gamma=0.01", 1800, criterion5},
        {"positive-P vs Fock oracle moments", 300, criterion6},
        {"phase diffusion slope", 120, criterion7},
        {"normalization and vacuum conventions", 60, criterion8},
    };
    int status = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (only && only != n) continue;
        const Criterion& cr = all[i];
        if (n == 5 && !want_long) {
            std::cout << "criterion 5: SKIP " << cr.title << " (long-running; pass --long or set FLOQLIN_LONG=1)\n";
            if (only) status = kSkip;
            continue;
        }
        Checker c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << n << ": " << (c.passed() ? "PASS" : "FAIL") << " " << cr.title << " [" << num(secs)
                  << " s, target " << cr.budget_s << " s] " << c.summary() << "\n"
                  << std::flush;
        if (!c.passed()) status = 1;
    }
    return status;
}

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

// Batch command-line front end. Every subcommand resolves a flat JSON config
// (defaults < --config file < explicit flags < FLOQLIN_SEED), runs one
// pipeline, and commits its CSV/JSON/PGM outputs atomically.

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "floqlin/classical.hpp"
#include "floqlin/errors.hpp"
#include "floqlin/floquet.hpp"
#include "floqlin/fluctuations.hpp"
#include "floqlin/fock_oracle.hpp"
#include "floqlin/io.hpp"
#include "floqlin/positive_p.hpp"

namespace floqlin::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Decimal literal or "sqrt:x".
inline double parse_real(const std::string& text) {
    std::string s = text;
    bool root = false;
    if (s.rfind("sqrt:", 0) == 0) {
        root = true;
        s = s.substr(5);
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + text + "'");
    if (root) {
        if (v < 0.0) throw UsageError("sqrt of a negative value: '" + text + "'");
        v = std::sqrt(v);
    }
    return v;
}

enum class Kind { Real, Count, Flag };

struct FlagSpec {
    std::string flag;  // without leading dashes
    std::string key;   // config key
    Kind kind = Kind::Real;
    json fallback;
    std::string help;
};

struct Context {
    std::string command;
    json config;
    std::string hash;
    io::AtomicOutputs* out = nullptr;
    json results = json::object();
    bool plot_script = false;

    [[nodiscard]] double real(const char* k) const { return config.at(k).get<double>(); }
    [[nodiscard]] std::size_t count(const char* k) const { return config.at(k).get<std::size_t>(); }
    [[nodiscard]] bool flag(const char* k) const { return config.at(k).get<bool>(); }
    [[nodiscard]] ModelParams model() const {
        ModelParams p{real("F"), real("Delta"), config.contains("gamma") ? real("gamma") : 0.1};
        return p;
    }
    void csv(const std::string& name, const io::CsvTable& t) { out->stage(name, t.render(hash)); }
    void pgm(const std::string& name, const WignerGrid& g) {
        io::PgmScale s;
        out->stage(name, io::render_pgm(g, hash, &s));
        results["grids"][name] = {{"w_min", s.w_min},   {"w_max", s.w_max}, {"x_min", g.x_min},
                                  {"x_max", g.x_max},   {"p_min", g.p_min}, {"p_max", g.p_max},
                                  {"nx", g.nx},         {"ny", g.ny},       {"mass", g.mass()},
                                  {"row_order", "p ascending, x ascending within a row"}};
    }
};

struct Command {
    std::string name;
    std::string help;
    std::vector<FlagSpec> flags;
    std::function<void(Context&)> body;
};

namespace detail {

inline std::string num(double v) { return io::fmt(v); }

inline std::vector<FlagSpec> model_flags(bool with_gamma, const char* F = "sqrt:0.1") {
    std::vector<FlagSpec> f{
        {"F", "F", Kind::Real, parse_real(F), "drive amplitude (decimal or sqrt:x)"},
        {"Delta", "Delta", Kind::Real, parse_real("sqrt:0.4"), "detuning (decimal or sqrt:x)"},
        {"ngrid", "ngrid", Kind::Count, 1024, "samples per cycle"},
    };
    if (with_gamma) f.push_back({"gamma", "gamma", Kind::Real, 0.1, "nonlinear loss rate"});
    return f;
}

inline std::vector<FlagSpec> grid_flags() {
    return {
        {"nx", "nx", Kind::Count, 201, "grid points along x"},
        {"ny", "ny", Kind::Count, 201, "grid points along p"},
        {"x-min", "x_min", Kind::Real, -6.0, "grid lower x"},
        {"x-max", "x_max", Kind::Real, 6.0, "grid upper x"},
        {"p-min", "p_min", Kind::Real, -6.0, "grid lower p"},
        {"p-max", "p_max", Kind::Real, 6.0, "grid upper p"},
        {"no-auto-extent", "fixed_extent", Kind::Flag, false, "do not widen the grid to the support"},
    };
}

inline std::vector<FlagSpec> concat(std::vector<FlagSpec> a, const std::vector<FlagSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline GridSpec grid_spec(const Context& c) {
    GridSpec g;
    g.nx = c.count("nx");
    g.ny = c.count("ny");
    g.x_min = c.real("x_min");
    g.x_max = c.real("x_max");
    g.p_min = c.real("p_min");
    g.p_max = c.real("p_max");
    g.auto_extend = !c.flag("fixed_extent");
    return g;
}

inline LimitCycle cycle_of(const Context& c) {
    CycleOptions o;
    o.ngrid = c.count("ngrid");
    return find_limit_cycle(c.model(), o);
}

inline void vec_cols(std::vector<std::string>& row, const Vec2& v) {
    row.push_back(num(v.a.real()));
    row.push_back(num(v.a.imag()));
    row.push_back(num(v.b.real()));
    row.push_back(num(v.b.imag()));
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json floquet_summary(const FloquetSystem& s) {
    return {{"period", s.period()},
            {"mu0", complex_json(s.eigen.mu0)},
            {"mu1", complex_json(s.eigen.mu1)},
            {"multiplier0", complex_json(s.eigen.multiplier0)},
            {"multiplier1", complex_json(s.eigen.multiplier1)},
            {"mean_trace", s.mean_trace},
            {"goldstone_residual", s.goldstone_residual},
            {"periodicity_error", s.periodicity_error},
            {"orthogonality_error", s.orthogonality_error},
            {"closure_residual", s.cycle.closure_residual}};
}

inline OracleParams oracle_params(const Context& c) {
    OracleParams op;
    op.model = c.model();
    op.n_max = c.count("n_max");
    op.tolerance = c.real("tolerance");
    op.max_time = c.real("max_time");
    return op;
}

inline std::vector<FlagSpec> oracle_flags() {
    return {
        {"n-max", "n_max", Kind::Count, 40, "initial Fock cutoff (escalates on leakage)"},
        {"tolerance", "tolerance", Kind::Real, 1e-9, "steady-state residual"},
        {"max-time", "max_time", Kind::Real, 5000.0, "evolution time limit"},
    };
}

// Square window around the origin wide enough for a state's rms radius.
inline GridSpec cover_state(GridSpec g, const FockState& st) {
    if (!g.auto_extend) return g;
    const QuadratureMoments q = quadrature_moments(st);
    const double rms = std::sqrt(q.mean[0] * q.mean[0] + q.covariance[0][0] + q.mean[1] * q.mean[1] +
                                 q.covariance[1][1]);
    const double h = rms + 6.0;
    g.x_min = std::min(g.x_min, -h);
    g.x_max = std::max(g.x_max, h);
    g.p_min = std::min(g.p_min, -h);
    g.p_max = std::max(g.p_max, h);
    return g;
}

inline json oracle_json(const FockState& st) {
    return {{"n_max", st.n_max},     {"leakage", st.leakage}, {"residual", st.residual},
            {"time", st.time},       {"dt", st.dt},           {"steps", st.steps},
            {"n_mean", expectation(st, 1, 1).real()}};
}

inline const char* plot_script() {
    return R"(# Non-normative helper: quick-look plots of floqlin outputs.
# Requires numpy and matplotlib. Usage: python3 <this file> <output dir>
import json, pathlib, sys
import numpy as np
import matplotlib.pyplot as plt

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
for pgm in sorted(out.glob("*.pgm")):
    raw = pgm.read_bytes()
    lines, pos = [], 0
    while len(lines) < 3:
        end = raw.index(b"\n", pos)
        line = raw[pos:end]
        pos = end + 1
        if not line.startswith(b"#"):
            lines.append(line)
    w, h = map(int, lines[1].split())
    data = np.frombuffer(raw[pos:pos + 2 * w * h], dtype=">u2").reshape(h, w)
    plt.figure()
    plt.imshow(data, origin="lower", cmap="viridis")
    plt.title(pgm.name)
    plt.savefig(pgm.with_suffix(".png"))
for csv in sorted(out.glob("*.csv")):
    table = np.genfromtxt(csv, delimiter=",", names=True, comments="#", dtype=None, encoding=None)
    cols = [n for n in table.dtype.names if np.issubdtype(table[n].dtype, np.number)]
    if len(cols) < 2:
        continue
    plt.figure()
    for c in cols[1:4]:
        plt.plot(table[cols[0]], table[c], label=c)
    plt.xlabel(cols[0])
    plt.legend()
    plt.savefig(csv.with_suffix(".png"))
)";
}

}  // namespace detail

inline std::vector<Command> commands() {
    using detail::concat;
    using detail::num;
    std::vector<Command> cmds;

    cmds.push_back({"phase-diagram", "region labels over (I, Delta^2)",
                    {{"I-max", "I_max", Kind::Real, 2.0, "largest intensity"},
                     {"Delta2-max", "Delta2_max", Kind::Real, 1.0, "largest Delta^2"},
                     {"resolution", "resolution", Kind::Count, 200, "points per axis"}},
                    [](Context& c) {
                        const auto cells = phase_diagram(c.real("I_max"), c.real("Delta2_max"), c.count("resolution"));
                        io::CsvTable t({"Delta2", "I", "label", "to_tp_plus", "to_tp_minus", "to_hb", "to_up"});
                        std::map<std::string, std::size_t> counts;
                        for (const auto& cell : cells) {
                            const std::string label(to_string(cell.region.label));
                            ++counts[label];
                            t.row({num(cell.Delta2), num(cell.I), label, num(cell.region.to_tp_plus),
                                   num(cell.region.to_tp_minus), num(cell.region.to_hb), num(cell.region.to_up)});
                        }
                        c.csv("phase_diagram.csv", t);
                        c.results["label_counts"] = counts;
                        c.results["turning_point_coalescence_Delta2"] = 1.0 / 3.0;
                        c.results["hopf_intensity"] = 0.5;
                    }});

    cmds.push_back({"bifurcation", "stationary branches and cycle intensity versus F^2",
                    {{"Delta", "Delta", Kind::Real, parse_real("sqrt:0.4"), "detuning (decimal or sqrt:x)"},
                     {"F2-min", "F2_min", Kind::Real, 0.0, "smallest F^2"},
                     {"F2-max", "F2_max", Kind::Real, 1.0, "largest F^2"},
                     {"points", "points", Kind::Count, 101, "number of F^2 values"},
                     {"ngrid", "ngrid", Kind::Count, 256, "samples per cycle"}},
                    [](Context& c) {
                        CycleOptions o;
                        o.ngrid = c.count("ngrid");
                        const auto rows = bifurcation_scan(c.real("Delta"), c.real("F2_min"), c.real("F2_max"),
                                                           c.count("points"), o);
                        io::CsvTable t({"F2", "kind", "branch", "I", "phi", "stable", "lambda_plus_re",
                                        "lambda_plus_im", "lambda_minus_re", "lambda_minus_im", "cycle_amplitude",
                                        "cycle_period", "status"});
                        const std::string nan = num(std::numeric_limits<double>::quiet_NaN());
                        std::size_t cycles = 0;
                        for (const auto& r : rows) {
                            for (std::size_t b = 0; b < r.states.size(); ++b) {
                                const auto& s = r.states[b];
                                t.row({num(r.F2), "stationary", std::to_string(b), num(s.I), num(s.phi),
                                       s.stable ? "1" : "0", num(s.lambda_plus.real()), num(s.lambda_plus.imag()),
                                       num(s.lambda_minus.real()), num(s.lambda_minus.imag()), nan, nan, "ok"});
                            }
                            if (r.cycle_mean_intensity) {
                                ++cycles;
                                t.row({num(r.F2), "cycle", "0", num(*r.cycle_mean_intensity), nan, "1", nan, nan, nan,
                                       nan, num(*r.cycle_amplitude), num(*r.cycle_period), "ok"});
                            } else {
                                t.row({num(r.F2), "cycle", "0", nan, nan, "0", nan, nan, nan, nan, nan, nan,
                                       r.cycle_status});
                            }
                        }
                        c.csv("bifurcation.csv", t);
                        c.results["points_with_cycle"] = cycles;
                    }});

    cmds.push_back({"limit-cycle", "classical limit cycle samples", detail::model_flags(false), [](Context& c) {
                        const LimitCycle cyc = detail::cycle_of(c);
                        io::CsvTable t({"tau", "beta_re", "beta_im", "dbeta_re", "dbeta_im"});
                        for (std::size_t k = 0; k < cyc.ngrid(); ++k) {
                            t.row({num(cyc.tau(k)), num(cyc.samples[k].real()), num(cyc.samples[k].imag()),
                                   num(cyc.derivatives[k].real()), num(cyc.derivatives[k].imag())});
                        }
                        c.csv("limit_cycle.csv", t);
                        c.results["period"] = cyc.period;
                        c.results["closure_residual"] = cyc.closure_residual;
                        c.results["mean_intensity"] = cyc.mean_intensity;
                        c.results["amplitude"] = cyc.amplitude;
                        c.results["newton_iterations"] = cyc.newton_iterations;
                    }});

    cmds.push_back({"floquet", "Floquet exponents, modes and fluctuation kernels",
                    concat(detail::model_flags(false), {{"substeps", "substeps", Kind::Count, 4, "RK4 steps per grid cell"}}),
                    [](Context& c) {
                        FloquetOptions fo;
                        fo.substeps = c.count("substeps");
                        const FloquetSystem s = build_floquet(detail::cycle_of(c), fo);
                        const auto k0 = theta_kernel(s);
                        const auto C = c_kernel(s);
                        io::CsvTable t({"tau", "beta_re", "beta_im", "p0a_re", "p0a_im", "p0b_re", "p0b_im", "p1a_re",
                                        "p1a_im", "p1b_re", "p1b_im", "q0a_re", "q0a_im", "q0b_re", "q0b_im", "q1a_re",
                                        "q1a_im", "q1b_re", "q1b_im", "theta_kernel", "C"});
                        for (std::size_t k = 0; k < s.ngrid(); ++k) {
                            std::vector<std::string> row{num(s.cycle.tau(k)), num(s.cycle.samples[k].real()),
                                                         num(s.cycle.samples[k].imag())};
                            detail::vec_cols(row, s.p0[k]);
                            detail::vec_cols(row, s.p1[k]);
                            detail::vec_cols(row, s.q0[k]);
                            detail::vec_cols(row, s.q1[k]);
                            row.push_back(num(k0[k]));
                            row.push_back(num(C[k]));
                            t.row(std::move(row));
                        }
                        c.csv("floquet_modes.csv", t);
                        io::CsvTable e({"index", "multiplier_re", "multiplier_im", "mu_re", "mu_im"});
                        e.row({"0", num(s.eigen.multiplier0.real()), num(s.eigen.multiplier0.imag()),
                               num(s.eigen.mu0.real()), num(s.eigen.mu0.imag())});
                        e.row({"1", num(s.eigen.multiplier1.real()), num(s.eigen.multiplier1.imag()),
                               num(s.eigen.mu1.real()), num(s.eigen.mu1.imag())});
                        c.csv("floquet_exponents.csv", e);
                        c.results = detail::floquet_summary(s);
                        c.results["mean_theta_kernel"] = periodic_mean<double>(k0);
                    }});

    cmds.push_back({"theta-diffusion", "phase-diffusion variance, optionally simulated",
                    concat(detail::model_flags(true),
                           {{"periods", "periods", Kind::Count, 10, "number of periods"},
                            {"samples-per-period", "samples_per_period", Kind::Count, 64, "output samples per period"},
                            {"simulate", "simulate", Kind::Flag, false, "also run the projected linear simulator"},
                            {"n-traj", "n_traj", Kind::Count, 10000, "trajectories for --simulate"},
                            {"dt", "dt", Kind::Real, 5e-3, "time step for --simulate"},
                            {"seed", "seed", Kind::Count, 1, "random seed"}}),
                    [](Context& c) {
                        const FloquetSystem s = build_floquet(detail::cycle_of(c));
                        const double gamma = c.real("gamma");
                        const ThetaDiffusion td = theta_diffusion(s, gamma, c.count("periods"), c.count("samples_per_period"));
                        std::optional<ThetaSimResult> sim;
                        if (c.flag("simulate")) {
                            ThetaSimOptions o;
                            o.dt = c.real("dt");
                            o.n_traj = c.count("n_traj");
                            o.seed = c.count("seed");
                            o.samples_per_period = c.count("samples_per_period");
                            o.t_end = s.period() * static_cast<double>(c.count("periods"));
                            sim = linearized_theta_sim(s, gamma, o);
                        }
                        std::vector<std::string> header{"tau", "variance"};
                        if (sim) header.push_back("simulated_variance");
                        io::CsvTable t(header);
                        for (std::size_t i = 0; i < td.tau.size(); ++i) {
                            std::vector<std::string> row{num(td.tau[i]), num(td.variance[i])};
                            if (sim) {
                                row.push_back(i < sim->theta_variance.size()
                                                  ? num(sim->theta_variance[i])
                                                  : num(std::numeric_limits<double>::quiet_NaN()));
                            }
                            t.row(std::move(row));
                        }
                        c.csv("theta_diffusion.csv", t);
                        c.results = detail::floquet_summary(s);
                        c.results["slope"] = td.slope;
                        if (sim) {
                            c.results["simulated_slope"] = sim->slope;
                            c.results["simulated_r_squared"] = sim->r_squared;
                            c.results["predicted_slope"] = sim->predicted_slope;
                            c.results["c1_steady_ratio"] = sim->c1_steady_ratio;
                            c.results["imaginary_share"] = sim->contamination;
                        }
                    }});

    cmds.push_back({"wigner-linearized", "Gaussian-mixture Wigner function",
                    concat(concat(detail::model_flags(true), detail::grid_flags()),
                           {{"n-theta", "n_theta", Kind::Count, 256, "mixture components"}}),
                    [](Context& c) {
                        const FloquetSystem s = build_floquet(detail::cycle_of(c));
                        const WignerGrid g = mixture_wigner(s, c.real("gamma"), detail::grid_spec(c), c.count("n_theta"));
                        c.pgm("wigner_linearized.pgm", g);
                        c.results["floquet"] = detail::floquet_summary(s);
                    }});

    cmds.push_back({"wigner-exact", "steady-state Wigner function of the master equation",
                    concat(concat(detail::model_flags(true), detail::grid_flags()), detail::oracle_flags()),
                    [](Context& c) {
                        const FockState st = evolve_steady(detail::oracle_params(c));
                        const WignerGrid g = exact_wigner(st, detail::cover_state(detail::grid_spec(c), st));
                        c.pgm("wigner_exact.pgm", g);
                        c.results["oracle"] = detail::oracle_json(st);
                    }});

    cmds.push_back({"compare", "linearized versus exact Wigner function on a shared grid",
                    concat(concat(concat(detail::model_flags(true), detail::grid_flags()), detail::oracle_flags()),
                           {{"n-theta", "n_theta", Kind::Count, 256, "mixture components"}}),
                    [](Context& c) {
                        const FloquetSystem s = build_floquet(detail::cycle_of(c));
                        const double gamma = c.real("gamma");
                        const FockState st = evolve_steady(detail::oracle_params(c));
                        GridSpec spec = detail::grid_spec(c);
                        if (spec.auto_extend) {
                            spec = cover_snapshots(spec, mixture_snapshots(s, gamma, c.count("n_theta")));
                            spec = detail::cover_state(spec, st);
                            spec.auto_extend = false;
                        }
                        const WignerGrid lin = mixture_wigner(s, gamma, spec, c.count("n_theta"));
                        const WignerGrid ex = exact_wigner(st, spec);
                        const WignerComparison cmp = compare_wigner(lin, ex, s, gamma);
                        c.pgm("wigner_linearized.pgm", lin);
                        c.pgm("wigner_exact.pgm", ex);
                        c.results["l1"] = cmp.l1;
                        c.results["l1_relative"] = cmp.l1_relative;
                        c.results["sup_norm"] = cmp.sup_norm;
                        c.results["exact_max_at"] = {cmp.exact_argmax[0], cmp.exact_argmax[1]};
                        c.results["exact_max_cells_from_cycle"] = cmp.argmax_cells_from_cycle;
                        c.results["oracle"] = detail::oracle_json(st);
                        c.results["floquet"] = detail::floquet_summary(s);
                    }});

    cmds.push_back({"pp-moments", "positive-P ensemble moments",
                    {{"F", "F", Kind::Real, parse_real("sqrt:0.1"), "drive amplitude (decimal or sqrt:x)"},
                     {"Delta", "Delta", Kind::Real, parse_real("sqrt:0.4"), "detuning (decimal or sqrt:x)"},
                     {"gamma", "gamma", Kind::Real, 0.1, "nonlinear loss rate"},
                     {"n-traj", "n_traj", Kind::Count, 10000, "trajectories"},
                     {"dt", "dt", Kind::Real, 1e-3, "time step"},
                     {"t-end", "t_end", Kind::Real, 0.0, "final time (0: automatic)"},
                     {"window-start", "window_start", Kind::Real, 0.0, "start of the averaging window (0: automatic)"},
                     {"seed", "seed", Kind::Count, 1, "random seed"},
                     {"oracle", "oracle", Kind::Flag, false, "compare with the Fock oracle"},
                     {"n-max", "n_max", Kind::Count, 40, "Fock cutoff for --oracle"},
                     {"tolerance", "tolerance", Kind::Real, 1e-9, "oracle steady-state residual"},
                     {"max-time", "max_time", Kind::Real, 5000.0, "oracle evolution time limit"}},
                    [](Context& c) {
                        EnsembleOptions o;
                        o.n_traj = c.count("n_traj");
                        o.dt = c.real("dt");
                        o.t_end = c.real("t_end");
                        o.window_start = c.real("window_start");
                        o.seed = c.count("seed");
                        const EnsembleStats st = simulate_ensemble(c.model(), o);
                        std::vector<std::string> header{"tau"};
                        for (const auto& m : st.moments) {
                            const std::string tag = "m" + std::to_string(m.m) + "n" + std::to_string(m.n);
                            header.push_back(tag + "_re");
                            header.push_back(tag + "_im");
                        }
                        io::CsvTable t(header);
                        for (std::size_t i = 0; i < st.times.size(); ++i) {
                            std::vector<std::string> row{num(st.times[i])};
                            for (std::size_t k = 0; k < st.moments.size(); ++k) {
                                row.push_back(num(st.series[k][i].real()));
                                row.push_back(num(st.series[k][i].imag()));
                            }
                            t.row(std::move(row));
                        }
                        c.csv("pp_moments.csv", t);
                        json steady = json::array();
                        std::optional<FockState> fs;
                        if (c.flag("oracle")) fs = evolve_steady(detail::oracle_params(c));
                        for (std::size_t k = 0; k < st.moments.size(); ++k) {
                            const auto [v, se] = st.quantum(k);
                            json e = {{"m", st.moments[k].m}, {"n", st.moments[k].n}, {"value", detail::complex_json(v)},
                                      {"standard_error", se}};
                            if (fs) {
                                const cplx ref = expectation(*fs, st.moments[k].m, st.moments[k].n);
                                e["oracle"] = detail::complex_json(ref);
                                e["z"] = std::abs(v - ref) / se;
                            }
                            steady.push_back(e);
                        }
                        c.results["steady"] = steady;
                        c.results["divergent"] = st.divergent;
                        c.results["window_start"] = st.window_start;
                        c.results["t_end"] = st.t_end;
                        if (fs) c.results["oracle"] = detail::oracle_json(*fs);
                    }});
    return cmds;
}

// Parses argv, runs one subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const std::vector<Command> cmds = commands();
    CLI::App app{"floqlin: linearized quantum fluctuations around limit cycles"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    struct Bound {
        const Command* cmd;
        CLI::App* sub;
        std::map<std::string, std::string> text;
        std::map<std::string, bool> flags;
        std::map<std::string, CLI::Option*> opts;
        std::string out_dir = ".";
        std::string config_path;
        bool plot = false;
    };
    std::vector<Bound> bound(cmds.size());
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        Bound& b = bound[i];
        b.cmd = &cmds[i];
        b.sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        for (const auto& f : cmds[i].flags) {
            if (f.kind == Kind::Flag) {
                b.opts[f.key] = b.sub->add_flag("--" + f.flag, b.flags[f.key], f.help);
            } else {
                b.opts[f.key] = b.sub->add_option("--" + f.flag, b.text[f.key], f.help + " [default " + f.fallback.dump() + "]");
            }
        }
        b.sub->add_option("--out", b.out_dir, "output directory");
        b.sub->add_option("--config", b.config_path, "re-run from a metadata JSON file");
        b.sub->add_flag("--emit-plot-script", b.plot, "also write a non-normative plotting script");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    const Bound* active = nullptr;
    for (const auto& b : bound)
        if (b.sub->parsed()) active = &b;
    if (!active) return kUsage;
    const Command& cmd = *active->cmd;

    Context ctx;
    ctx.command = cmd.name;
    ctx.plot_script = active->plot;
    try {
        json cfg = json::object();
        for (const auto& f : cmd.flags) cfg[f.key] = f.fallback;
        if (!active->config_path.empty()) {
            json file;
            try {
                file = json::parse(io::read_file(active->config_path));
            } catch (const json::exception& e) {
                throw UsageError(std::string("cannot parse config: ") + e.what());
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (file.contains("command") && file["command"] != cmd.name) {
                throw UsageError("config was written by '" + file["command"].get<std::string>() + "'");
            }
            const json& src = file.contains("config") ? file["config"] : file;
            for (auto it = src.begin(); it != src.end(); ++it) {
                if (!cfg.contains(it.key())) throw UsageError("unknown config key '" + it.key() + "'");
                cfg[it.key()] = it.value();
            }
        }
        for (const auto& f : cmd.flags) {
            if (active->opts.at(f.key)->count() == 0) continue;
            switch (f.kind) {
                case Kind::Flag: cfg[f.key] = active->flags.at(f.key); break;
                case Kind::Real: cfg[f.key] = parse_real(active->text.at(f.key)); break;
                case Kind::Count: {
                    const double v = parse_real(active->text.at(f.key));
                    if (v < 0.0 || v != std::floor(v)) throw UsageError("--" + f.flag + " expects a non-negative integer");
                    cfg[f.key] = static_cast<std::uint64_t>(v);
                    break;
                }
            }
        }
        if (cfg.contains("seed")) {
            if (const char* env = std::getenv("FLOQLIN_SEED")) {
                try {
                    cfg["seed"] = static_cast<std::uint64_t>(std::stoull(env));
                } catch (const std::exception&) {
                    throw UsageError("FLOQLIN_SEED must be a non-negative integer");
                }
            }
        }
        ctx.config = cfg;
        ctx.hash = io::hex64(io::fnv1a64(cmd.name + "\n" + cfg.dump()));
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    io::AtomicOutputs outputs(active->out_dir);
    ctx.out = &outputs;
    const std::string meta_name = cmd.name + ".json";
    json meta = {{"command", cmd.name}, {"version", kVersion}, {"config", ctx.config}, {"config_hash", ctx.hash}};
    try {
        cmd.body(ctx);
        if (ctx.plot_script) outputs.stage(cmd.name + "_plot.py", detail::plot_script());
        meta["status"] = "ok";
        meta["results"] = ctx.results;
        std::vector<std::string> files = outputs.names();
        files.push_back(meta_name);
        meta["files"] = files;
        outputs.stage(meta_name, meta.dump(2) + "\n");
        outputs.commit();
        out << "wrote " << files.size() << " file(s) to " << active->out_dir << " (config_hash=" << ctx.hash << ")\n";
        return kOk;
    } catch (const Error& e) {
        outputs.rollback();
        meta["status"] = "error";
        meta["error"] = {{"module", e.module()}, {"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
        err << "numerical failure in " << e.module() << " (" << to_string(e.kind()) << "): " << e.what() << "\n";
    } catch (const std::exception& e) {
        outputs.rollback();
        meta["status"] = "error";
        meta["error"] = {{"module", "cli"}, {"kind", "internal"}, {"message", e.what()}};
        err << "failure: " << e.what() << "\n";
    }
    try {
        io::AtomicOutputs failure(active->out_dir);
        failure.stage(meta_name, meta.dump(2) + "\n");
        failure.commit();
    } catch (const std::exception&) {
    }
    return kNumerical;
}

}  // namespace floqlin::cli

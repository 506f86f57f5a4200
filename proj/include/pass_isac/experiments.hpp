// SPDX-License-Identifier: Apache-2.0
//
// pass-isac: CRB-optimal digital beamforming and pinching-antenna placement
// for integrated sensing and communication
// Copyright (C) 2026 pass-isac contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "validate.hpp"

namespace pass_isac {

enum class SweepKind { Power, Waveguides, Sinr };
enum class Scheme { Continuous, Uniform, Discrete };

inline const char *sweep_var_name(SweepKind k) {
    switch (k) {
    case SweepKind::Power:
        return "power_dbm";
    case SweepKind::Waveguides:
        return "waveguides";
    default:
        return "sinr_db";
    }
}

inline std::string scheme_name(Scheme s, int levels) {
    switch (s) {
    case Scheme::Continuous:
        return "continuous";
    case Scheme::Uniform:
        return "uniform";
    default:
        return "discrete:" + std::to_string(levels);
    }
}

struct MonteCarloCfg {
    int trials = 200;
    double grid_step = 0.05;
};

// Batch description: base deployment, one sweep axis, scheme, seeds.
struct ExperimentConfig {
    SystemConfig base;
    SweepKind sweep = SweepKind::Power;
    std::vector<double> sweep_values;
    Scheme scheme = Scheme::Continuous;
    int discrete_levels = 0;
    std::vector<int> seeds;
    std::optional<MonteCarloCfg> monte_carlo;

    void validate() const {
        if (sweep_values.empty())
            throw ConfigError("sweep value list is empty");
        if (!std::is_sorted(sweep_values.begin(), sweep_values.end()))
            throw ConfigError("sweep values must be sorted ascending");
        if (seeds.empty())
            throw ConfigError("seed list is empty");
        if (scheme == Scheme::Discrete && discrete_levels < 1)
            throw ConfigError("discrete scheme needs at least one quantization level");
        if (monte_carlo && (monte_carlo->trials < 1 || monte_carlo->grid_step <= 0.0))
            throw ConfigError("invalid Monte-Carlo settings");
    }
};

// ------------------------------------------------------------ config file --
//
// Flat `key = value` text; '#' starts a comment. dBm/dB inputs are converted
// to linear units here, once.

inline std::map<std::string, std::string> parse_kv_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r\n");
            const auto b = s.find_last_not_of(" \t\r\n");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty())
            kv[key] = val;
    }
    return kv;
}

inline std::vector<double> parse_list(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(std::stod(item));
    return out;
}

struct SweepLists {
    std::vector<double> power_dbm{20, 25, 30, 35, 40};
    std::vector<double> waveguides{2, 4, 6, 8};
    std::vector<double> sinr_db{0, 3, 6, 9, 12};
};

// Apply `key = value` pairs onto the base config and sweep lists. Unknown
// keys are rejected so typos surface immediately.
inline void apply_config_entries(const std::map<std::string, std::string> &kv,
                                 SystemConfig &cfg, SweepLists &sweeps,
                                 MonteCarloCfg &mc) {
    for (const auto &[key, val] : kv) {
        if (key == "f_c_hz")
            cfg.f_c = std::stod(val);
        else if (key == "n_e")
            cfg.n_e = std::stod(val);
        else if (key == "waveguides")
            cfg.num_waveguides = std::stoi(val);
        else if (key == "pas_per_waveguide")
            cfg.pas_per_waveguide = std::stoi(val);
        else if (key == "rx_elements")
            cfg.rx_elements = std::stoi(val);
        else if (key == "users")
            cfg.num_users = std::stoi(val);
        else if (key == "delta_m")
            cfg.delta = std::stod(val);
        else if (key == "length_m")
            cfg.length = std::stod(val);
        else if (key == "offset_m")
            cfg.offset = std::stod(val);
        else if (key == "height_m")
            cfg.height = std::stod(val);
        else if (key == "area_x_m")
            cfg.area_x = std::stod(val);
        else if (key == "area_y_m")
            cfg.area_y = std::stod(val);
        else if (key == "slots")
            cfg.slots = std::stoi(val);
        else if (key == "noise_user_dbm")
            cfg.sigma0_sq = dbm_to_watt(std::stod(val));
        else if (key == "noise_sense_dbm")
            cfg.sigmas_sq = dbm_to_watt(std::stod(val));
        else if (key == "power_dbm")
            cfg.power = dbm_to_watt(std::stod(val));
        else if (key == "sinr_db")
            cfg.gamma.assign(1, db_to_linear(std::stod(val)));
        else if (key == "beta_coeff")
            cfg.beta_mag_coeff = std::stod(val);
        else if (key == "rng_seed")
            cfg.rng_seed = std::stoull(val);
        else if (key == "sweep_power_dbm")
            sweeps.power_dbm = parse_list(val);
        else if (key == "sweep_waveguides")
            sweeps.waveguides = parse_list(val);
        else if (key == "sweep_sinr_db")
            sweeps.sinr_db = parse_list(val);
        else if (key == "mc_trials")
            mc.trials = std::stoi(val);
        else if (key == "mc_grid_step_m")
            mc.grid_step = std::stod(val);
        else
            throw ConfigError("unknown config key: " + key);
    }
}

// ------------------------------------------------------------- result table --

struct ResultRow {
    std::string sweep_var;
    double sweep_value = 0.0;
    int seed = 0;
    std::string scheme;
    double rcrb_m = 0.0;
    double trace_crb_m2 = 0.0;
    bool feasible = false;
    double power_used_w = 0.0;
    int outer_iters = 0;
    double wall_s = 0.0;
    std::optional<McReport> mc;
};

using ResultTable = std::vector<ResultRow>;

// Configure one sweep cell: the swept quantity overrides the base value.
inline SystemConfig cell_config(const ExperimentConfig &xcfg, double value) {
    SystemConfig cfg = xcfg.base;
    switch (xcfg.sweep) {
    case SweepKind::Power:
        cfg.power = dbm_to_watt(value);
        break;
    case SweepKind::Waveguides:
        cfg.num_waveguides = static_cast<int>(value);
        break;
    case SweepKind::Sinr:
        cfg.gamma.assign(static_cast<std::size_t>(cfg.num_users), db_to_linear(value));
        break;
    }
    cfg.finalize();
    return cfg;
}

inline AoOptions scheme_options(const ExperimentConfig &xcfg) {
    AoOptions opts;
    switch (xcfg.scheme) {
    case Scheme::Uniform:
        opts.skip_pinching = true;
        break;
    case Scheme::Discrete:
        opts.penalty.grid.kind = GridSpec::Kind::Discrete;
        opts.penalty.grid.levels = xcfg.discrete_levels;
        break;
    case Scheme::Continuous:
        break;
    }
    return opts;
}

// Run one (sweep value, seed) cell end to end.
inline ResultRow run_cell(const ExperimentConfig &xcfg, double value, int seed) {
    ResultRow row;
    row.sweep_var = sweep_var_name(xcfg.sweep);
    row.sweep_value = value;
    row.seed = seed;
    row.scheme = scheme_name(xcfg.scheme, xcfg.discrete_levels);

    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig cfg = cell_config(xcfg, value);
    const Scenario sc = sample_scenario(cfg, static_cast<std::uint64_t>(seed));
    const PassLayout layout = uniform_layout(cfg);
    const AoOptions opts = scheme_options(xcfg);

    AoResult res;
    bool solver_ok = true;
    try {
        res = ao_solve(sc, cfg, layout, opts);
    } catch (const SolverFailure &) {
        solver_ok = false;
    }
    row.outer_iters =
        solver_ok ? static_cast<int>(res.report.iterates.size()) : 0;
    if (solver_ok && res.report.status != SolveStatus::Infeasible &&
        res.report.best >= 0) {
        const auto &best =
            res.report.iterates[static_cast<std::size_t>(res.report.best)];
        row.feasible = true;
        row.trace_crb_m2 = best.trace_crb;
        row.rcrb_m = best.rcrb;
        row.power_used_w = best.power_used;
        if (xcfg.monte_carlo) {
            McOptions mo;
            mo.trials = xcfg.monte_carlo->trials;
            mo.grid_step = xcfg.monte_carlo->grid_step;
            row.mc = monte_carlo_validate(res.layout, res.beams, sc, cfg, mo);
        }
    } else {
        row.feasible = false;
        row.trace_crb_m2 = std::numeric_limits<double>::infinity();
        row.rcrb_m = std::numeric_limits<double>::infinity();
        row.power_used_w = 0.0;
    }
    row.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// Full sweep: every (value, seed) cell, embarrassingly parallel, results
// assembled in deterministic (value, seed) order regardless of scheduling.
inline ResultTable run_sweep(const ExperimentConfig &xcfg, int threads = 0) {
    xcfg.validate();
    struct Cell {
        double value;
        int seed;
    };
    std::vector<Cell> cells;
    for (double v : xcfg.sweep_values)
        for (int s : xcfg.seeds)
            cells.push_back({v, s});
    ResultTable rows(cells.size());

    if (threads <= 0)
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size())
                return;
            rows[i] = run_cell(xcfg, cells[i].value, cells[i].seed);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();
    return rows;
}

// ------------------------------------------------------------------ output --

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace detail

// Mean RCRB per (scheme, sweep value) over feasible seeds; infinity when a
// value has no feasible seed.
inline std::map<std::pair<std::string, double>, double>
aggregate_mean_rcrb(const ResultTable &rows) {
    std::map<std::pair<std::string, double>, std::pair<double, int>> acc;
    for (const auto &r : rows) {
        auto &slot = acc[{r.scheme, r.sweep_value}];
        if (r.feasible) {
            slot.first += r.rcrb_m;
            slot.second += 1;
        }
    }
    std::map<std::pair<std::string, double>, double> out;
    for (const auto &[key, s] : acc)
        out[key] = s.second > 0 ? s.first / s.second
                                : std::numeric_limits<double>::infinity();
    return out;
}

// Write results.csv (one row per cell plus a `mean` row per sweep value),
// manifest.json, per-figure tab-separated plot data, and, when Monte-Carlo
// validation ran, validate_crb.csv.
inline void emit_outputs(const ResultTable &rows, const ExperimentConfig &xcfg,
                         const std::string &out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    auto open_out = [](const std::string &path) {
        std::ofstream f(path, std::ios::binary); // LF line endings everywhere
        if (!f)
            throw IoError("cannot open for writing: " + path);
        return f;
    };

    {
        auto csv = open_out(out_dir + "/results.csv");
        csv << "sweep_var,sweep_value,seed,scheme,rcrb_m,trace_crb_m2,feasible,"
               "power_used_w,outer_iters,wall_s\n";
        const auto means = aggregate_mean_rcrb(rows);
        bool have_group = false;
        std::string group_var, group_scheme;
        double group_value = 0.0;
        auto flush_mean = [&]() {
            if (!have_group)
                return;
            double trace_sum = 0.0, power_sum = 0.0, wall_sum = 0.0;
            int feas = 0, iter_sum = 0, count = 0;
            for (const auto &r : rows) {
                if (r.sweep_value != group_value || r.scheme != group_scheme)
                    continue;
                ++count;
                iter_sum += r.outer_iters;
                wall_sum += r.wall_s;
                if (r.feasible) {
                    ++feas;
                    trace_sum += r.trace_crb_m2;
                    power_sum += r.power_used_w;
                }
            }
            const auto mean_it = means.find({group_scheme, group_value});
            const double mean_rcrb = mean_it != means.end()
                                         ? mean_it->second
                                         : std::numeric_limits<double>::infinity();
            csv << group_var << ',' << detail::fmt_double(group_value) << ",mean,"
                << group_scheme << ',' << detail::fmt_double(mean_rcrb) << ','
                << detail::fmt_double(feas > 0 ? trace_sum / feas
                                               : std::numeric_limits<double>::infinity())
                << ',' << feas << ','
                << detail::fmt_double(feas > 0 ? power_sum / feas : 0.0) << ','
                << (count > 0 ? iter_sum / count : 0) << ','
                << detail::fmt_double(wall_sum) << '\n';
        };
        for (const auto &r : rows) {
            if (have_group &&
                (r.sweep_value != group_value || r.scheme != group_scheme))
                flush_mean();
            have_group = true;
            group_var = r.sweep_var;
            group_scheme = r.scheme;
            group_value = r.sweep_value;
            csv << r.sweep_var << ',' << detail::fmt_double(r.sweep_value) << ','
                << r.seed << ',' << r.scheme << ',' << detail::fmt_double(r.rcrb_m)
                << ',' << detail::fmt_double(r.trace_crb_m2) << ','
                << (r.feasible ? 1 : 0) << ',' << detail::fmt_double(r.power_used_w)
                << ',' << r.outer_iters << ',' << detail::fmt_double(r.wall_s)
                << '\n';
        }
        flush_mean();
    }

    {
        nlohmann::json j;
        j["library_version"] = version_string;
        j["sweep"] = sweep_var_name(xcfg.sweep);
        j["sweep_values"] = xcfg.sweep_values;
        j["scheme"] = scheme_name(xcfg.scheme, xcfg.discrete_levels);
        j["seeds"] = xcfg.seeds;
        const SystemConfig &c = xcfg.base;
        j["base"] = {{"f_c_hz", c.f_c},
                     {"c_mps", c.c},
                     {"n_e", c.n_e},
                     {"waveguides", c.num_waveguides},
                     {"pas_per_waveguide", c.pas_per_waveguide},
                     {"rx_elements", c.rx_elements},
                     {"users", c.num_users},
                     {"delta_m", c.delta},
                     {"length_m", c.length},
                     {"offset_m", c.offset},
                     {"height_m", c.height},
                     {"area_x_m", c.area_x},
                     {"area_y_m", c.area_y},
                     {"slots", c.slots},
                     {"sigma0_sq_w", c.sigma0_sq},
                     {"sigmas_sq_w", c.sigmas_sq},
                     {"power_w", c.power},
                     {"gamma_linear", c.gamma},
                     {"beta_coeff", c.beta_mag_coeff},
                     {"rng_seed", c.rng_seed}};
        if (xcfg.monte_carlo)
            j["monte_carlo"] = {{"trials", xcfg.monte_carlo->trials},
                                {"grid_step_m", xcfg.monte_carlo->grid_step}};
        auto mf = open_out(out_dir + "/manifest.json");
        mf << j.dump(2) << '\n';
    }

    {
        auto plot = open_out(out_dir + std::string("/plot_") +
                             sweep_var_name(xcfg.sweep) + ".tsv");
        std::vector<std::string> schemes;
        for (const auto &r : rows)
            if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end())
                schemes.push_back(r.scheme);
        const auto means = aggregate_mean_rcrb(rows);
        plot << sweep_var_name(xcfg.sweep);
        for (const auto &s : schemes)
            plot << '\t' << s;
        plot << '\n';
        std::vector<double> values;
        for (const auto &r : rows)
            if (std::find(values.begin(), values.end(), r.sweep_value) == values.end())
                values.push_back(r.sweep_value);
        std::sort(values.begin(), values.end());
        for (double v : values) {
            plot << detail::fmt_double(v);
            for (const auto &s : schemes) {
                const auto it = means.find({s, v});
                plot << '\t'
                     << detail::fmt_double(it != means.end()
                                               ? it->second
                                               : std::numeric_limits<double>::infinity());
            }
            plot << '\n';
        }
    }

    bool any_mc = false;
    for (const auto &r : rows)
        any_mc = any_mc || r.mc.has_value();
    if (any_mc) {
        auto vcsv = open_out(out_dir + "/validate_crb.csv");
        vcsv << "sweep_var,sweep_value,seed,scheme,mse_m2,trace_crb_m2,ratio,"
                "outliers,trials\n";
        for (const auto &r : rows) {
            if (!r.mc)
                continue;
            vcsv << r.sweep_var << ',' << detail::fmt_double(r.sweep_value) << ','
                 << r.seed << ',' << r.scheme << ',' << detail::fmt_double(r.mc->mse)
                 << ',' << detail::fmt_double(r.mc->trace_crb) << ','
                 << detail::fmt_double(r.mc->ratio) << ',' << r.mc->outliers << ','
                 << r.mc->trials << '\n';
        }
    }
}

// Rebuild the resolved experiment configuration from a run manifest.
inline ExperimentConfig load_manifest(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    ExperimentConfig xcfg;
    const std::string sweep = j.at("sweep").get<std::string>();
    if (sweep == "power_dbm")
        xcfg.sweep = SweepKind::Power;
    else if (sweep == "waveguides")
        xcfg.sweep = SweepKind::Waveguides;
    else if (sweep == "sinr_db")
        xcfg.sweep = SweepKind::Sinr;
    else
        throw ConfigError("unknown sweep in manifest: " + sweep);
    xcfg.sweep_values = j.at("sweep_values").get<std::vector<double>>();
    const std::string scheme = j.at("scheme").get<std::string>();
    if (scheme == "continuous")
        xcfg.scheme = Scheme::Continuous;
    else if (scheme == "uniform")
        xcfg.scheme = Scheme::Uniform;
    else if (scheme.rfind("discrete:", 0) == 0) {
        xcfg.scheme = Scheme::Discrete;
        xcfg.discrete_levels = std::stoi(scheme.substr(9));
    } else
        throw ConfigError("unknown scheme in manifest: " + scheme);
    xcfg.seeds = j.at("seeds").get<std::vector<int>>();
    const auto &b = j.at("base");
    SystemConfig &c = xcfg.base;
    c.f_c = b.at("f_c_hz").get<double>();
    c.c = b.at("c_mps").get<double>();
    c.n_e = b.at("n_e").get<double>();
    c.num_waveguides = b.at("waveguides").get<int>();
    c.pas_per_waveguide = b.at("pas_per_waveguide").get<int>();
    c.rx_elements = b.at("rx_elements").get<int>();
    c.num_users = b.at("users").get<int>();
    c.delta = b.at("delta_m").get<double>();
    c.length = b.at("length_m").get<double>();
    c.offset = b.at("offset_m").get<double>();
    c.height = b.at("height_m").get<double>();
    c.area_x = b.at("area_x_m").get<double>();
    c.area_y = b.at("area_y_m").get<double>();
    c.slots = b.at("slots").get<int>();
    c.sigma0_sq = b.at("sigma0_sq_w").get<double>();
    c.sigmas_sq = b.at("sigmas_sq_w").get<double>();
    c.power = b.at("power_w").get<double>();
    c.gamma = b.at("gamma_linear").get<std::vector<double>>();
    c.beta_mag_coeff = b.at("beta_coeff").get<double>();
    c.rng_seed = b.at("rng_seed").get<std::uint64_t>();
    if (j.contains("monte_carlo")) {
        MonteCarloCfg mc;
        mc.trials = j["monte_carlo"].at("trials").get<int>();
        mc.grid_step = j["monte_carlo"].at("grid_step_m").get<double>();
        xcfg.monte_carlo = mc;
    }
    return xcfg;
}

} // namespace pass_isac

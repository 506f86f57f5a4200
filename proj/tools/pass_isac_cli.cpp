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

#include <CLI11.hpp>
#include <iostream>

#include <pass_isac/pass_isac.hpp>

namespace pi = pass_isac;

int main(int argc, char **argv) {
    CLI::App app{"CRB-optimal beamforming and pinching-antenna placement "
                 "experiments"};
    app.require_subcommand(1);

    auto *run = app.add_subcommand("run", "run a parameter sweep");
    std::string config_path, sweep_arg, scheme_arg, out_dir;
    int num_seeds = 0;
    int threads = 0;
    bool validate_crb = false;
    std::vector<std::string> overrides;
    run->add_option("--config", config_path, "flat key=value config file");
    run->add_option("--sweep", sweep_arg, "power | waveguides | sinr")->required();
    run->add_option("--scheme", scheme_arg,
                    "continuous | uniform | discrete:<Z>")
        ->required();
    run->add_option("--seeds", num_seeds, "number of scenario seeds (0..n-1)")
        ->required()
        ->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--validate-crb", validate_crb,
                  "run the Monte-Carlo estimator against every solved cell");
    run->add_option("--set", overrides, "override a config key, e.g. --set users=2");
    run->add_option("--threads", threads, "worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        pi::SystemConfig base;
        pi::SweepLists sweeps;
        pi::MonteCarloCfg mc;
        std::map<std::string, std::string> kv;
        if (!config_path.empty())
            kv = pi::parse_kv_file(config_path);
        for (const auto &ov : overrides) { // CLI overrides beat file keys
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw pi::ConfigError("override must look like key=value: " + ov);
            kv[ov.substr(0, eq)] = ov.substr(eq + 1);
        }
        pi::apply_config_entries(kv, base, sweeps, mc);
        base.finalize();

        pi::ExperimentConfig xcfg;
        xcfg.base = base;
        if (sweep_arg == "power") {
            xcfg.sweep = pi::SweepKind::Power;
            xcfg.sweep_values = sweeps.power_dbm;
        } else if (sweep_arg == "waveguides") {
            xcfg.sweep = pi::SweepKind::Waveguides;
            xcfg.sweep_values = sweeps.waveguides;
        } else if (sweep_arg == "sinr") {
            xcfg.sweep = pi::SweepKind::Sinr;
            xcfg.sweep_values = sweeps.sinr_db;
        } else {
            throw pi::ConfigError("unknown sweep: " + sweep_arg);
        }
        if (scheme_arg == "continuous") {
            xcfg.scheme = pi::Scheme::Continuous;
        } else if (scheme_arg == "uniform") {
            xcfg.scheme = pi::Scheme::Uniform;
        } else if (scheme_arg.rfind("discrete:", 0) == 0) {
            xcfg.scheme = pi::Scheme::Discrete;
            xcfg.discrete_levels = std::stoi(scheme_arg.substr(9));
        } else {
            throw pi::ConfigError("unknown scheme: " + scheme_arg);
        }
        for (int s = 0; s < num_seeds; ++s)
            xcfg.seeds.push_back(s);
        if (validate_crb)
            xcfg.monte_carlo = mc;

        const pi::ResultTable rows = pi::run_sweep(xcfg, threads);
        pi::emit_outputs(rows, xcfg, out_dir);

        int feasible = 0;
        for (const auto &r : rows)
            feasible += r.feasible ? 1 : 0;
        std::cout << "wrote " << rows.size() << " cells (" << feasible
                  << " feasible) to " << out_dir << "\n";
        return 0;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

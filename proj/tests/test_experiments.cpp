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

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace pass_isac;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Strip the wall-clock column (last CSV field) from every line.
std::string without_wall(const std::string &csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out << (pos == std::string::npos ? line : line.substr(0, pos)) << '\n';
    }
    return out.str();
}

ExperimentConfig small_experiment() {
    ExperimentConfig xcfg;
    xcfg.base = oracles::default_config();
    xcfg.base.rng_seed = 7;
    xcfg.sweep = SweepKind::Power;
    xcfg.sweep_values = {27.0, 30.0};
    xcfg.scheme = Scheme::Uniform; // beamforming-only keeps the test quick
    xcfg.seeds = {0, 1, 2};
    return xcfg;
}

} // namespace

TEST_CASE("config files parse with unit conversion and strict keys") {
    const fs::path dir = fs::temp_directory_path() / "pass_isac_cfg_test";
    fs::create_directories(dir);
    const fs::path file = dir / "run.cfg";
    {
        std::ofstream out(file);
        out << "# comment line\n";
        out << "power_dbm = 33\n";
        out << "sinr_db = 3\n";
        out << "users = 2\n";
        out << "noise_user_dbm = -80\n";
        out << "sweep_power_dbm = 10, 20, 30\n";
        out << "mc_trials = 17\n";
    }
    SystemConfig cfg;
    SweepLists sweeps;
    MonteCarloCfg mc;
    apply_config_entries(parse_kv_file(file.string()), cfg, sweeps, mc);
    cfg.finalize();
    CHECK(cfg.power == Catch::Approx(dbm_to_watt(33.0)));
    CHECK(cfg.sigma0_sq == Catch::Approx(1e-11));
    CHECK(cfg.num_users == 2);
    REQUIRE(cfg.gamma.size() == 2);
    CHECK(cfg.gamma[0] == Catch::Approx(db_to_linear(3.0)));
    CHECK(sweeps.power_dbm == std::vector<double>{10.0, 20.0, 30.0});
    CHECK(mc.trials == 17);

    SystemConfig cfg2;
    std::map<std::string, std::string> bad{{"nonsense_key", "1"}};
    CHECK_THROWS_AS(apply_config_entries(bad, cfg2, sweeps, mc), ConfigError);
}

TEST_CASE("run_sweep produces ordered rows and flags infeasible cells") {
    ExperimentConfig xcfg = small_experiment();
    const ResultTable rows = run_sweep(xcfg);
    REQUIRE(rows.size() == 6);
    // deterministic (value, seed) ordering
    CHECK(rows[0].sweep_value == 27.0);
    CHECK(rows[0].seed == 0);
    CHECK(rows[3].sweep_value == 30.0);
    for (const auto &r : rows) {
        CHECK(r.sweep_var == "power_dbm");
        CHECK(r.scheme == "uniform");
        CHECK(r.feasible);
        CHECK(r.rcrb_m > 0.0);
        CHECK(r.rcrb_m == Catch::Approx(std::sqrt(r.trace_crb_m2)));
    }

    // Starve the power budget: every cell must flag, not throw.
    ExperimentConfig starved = xcfg;
    starved.base.power = 1e-15;
    starved.sweep = SweepKind::Sinr;
    starved.sweep_values = {6.0};
    const ResultTable flagged = run_sweep(starved);
    REQUIRE(flagged.size() == 3);
    for (const auto &r : flagged) {
        CHECK_FALSE(r.feasible);
        CHECK(std::isinf(r.rcrb_m));
    }
}

TEST_CASE("emitted outputs: header, aggregate rows, manifest round-trip") {
    const fs::path dir = fs::temp_directory_path() / "pass_isac_emit_test";
    fs::remove_all(dir);
    ExperimentConfig xcfg = small_experiment();
    const ResultTable rows = run_sweep(xcfg);
    emit_outputs(rows, xcfg, dir.string());

    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("sweep_var,sweep_value,seed,scheme,rcrb_m,trace_crb_m2,"
                    "feasible,power_used_w,outer_iters,wall_s\n",
                    0) == 0);
    // one mean row per sweep value
    std::size_t mean_rows = 0, pos = 0;
    while ((pos = csv.find(",mean,", pos)) != std::string::npos) {
        ++mean_rows;
        pos += 1;
    }
    CHECK(mean_rows == 2);

    const std::string plot = slurp(dir / "plot_power_dbm.tsv");
    CHECK(plot.rfind("power_dbm\tuniform\n", 0) == 0);
    CHECK(std::count(plot.begin(), plot.end(), '\n') == 3);

    const ExperimentConfig back = load_manifest((dir / "manifest.json").string());
    CHECK(back.sweep == xcfg.sweep);
    CHECK(back.sweep_values == xcfg.sweep_values);
    CHECK(back.scheme == xcfg.scheme);
    CHECK(back.seeds == xcfg.seeds);
    CHECK(back.base.f_c == xcfg.base.f_c);
    CHECK(back.base.power == xcfg.base.power);
    CHECK(back.base.gamma == xcfg.base.gamma);
    CHECK(back.base.rng_seed == xcfg.base.rng_seed);
    CHECK(back.base.delta == xcfg.base.delta);

    SECTION("empty tables emit a bare header") {
        const fs::path empty_dir = dir / "empty";
        emit_outputs({}, xcfg, empty_dir.string());
        const std::string empty_csv = slurp(empty_dir / "results.csv");
        CHECK(empty_csv ==
              "sweep_var,sweep_value,seed,scheme,rcrb_m,trace_crb_m2,feasible,"
              "power_used_w,outer_iters,wall_s\n");
    }
}

TEST_CASE("reruns are byte-identical apart from wall time") {
    const fs::path dir_a = fs::temp_directory_path() / "pass_isac_det_a";
    const fs::path dir_b = fs::temp_directory_path() / "pass_isac_det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    ExperimentConfig xcfg = small_experiment();
    xcfg.sweep_values = {30.0};
    xcfg.seeds = {0, 1};
    emit_outputs(run_sweep(xcfg), xcfg, dir_a.string());
    emit_outputs(run_sweep(xcfg), xcfg, dir_b.string());
    CHECK(without_wall(slurp(dir_a / "results.csv")) ==
          without_wall(slurp(dir_b / "results.csv")));
    CHECK(slurp(dir_a / "plot_power_dbm.tsv") == slurp(dir_b / "plot_power_dbm.tsv"));
    CHECK(slurp(dir_a / "manifest.json") == slurp(dir_b / "manifest.json"));
}

TEST_CASE("noiseless likelihood peaks at the true position") {
    SystemConfig cfg = oracles::default_config();
    cfg.rng_seed = 9100;
    cfg.sigmas_sq = 1e-20;
    cfg.slots = 64; // keep the synthesis cheap
    cfg.finalize();
    const PassLayout layout = uniform_layout(cfg);
    const Scenario sc = sample_scenario(cfg, 0);
    const ChannelSet ch = effective_channels(layout, sc, cfg);
    const BeamformingSolution beams =
        extract_rank_one(solve_sdr(build_sdr(ch, sc, cfg)), ch, cfg);

    // The PA spacing puts near-perfect grating lobes ~2 cm from the truth;
    // a window inside that separation with a fine grid isolates the mainlobe.
    McOptions mo;
    mo.trials = 3;
    mo.grid_step = cfg.lambda_c() / 16.0;
    mo.window = 0.005;
    mo.refine_iters = 3;
    const McReport rep = monte_carlo_validate(layout, beams, sc, cfg, mo);
    CHECK(rep.outliers == 0);
    CHECK(std::sqrt(rep.mse) <= mo.grid_step);
}

TEST_CASE("halving the coherent interval scales the bound") {
    SystemConfig cfg = oracles::default_config();
    cfg.rng_seed = 9200;
    cfg.finalize();
    const PassLayout layout = uniform_layout(cfg);
    const Scenario sc = sample_scenario(cfg, 1);
    const ChannelSet ch = effective_channels(layout, sc, cfg);
    const BeamformingSolution beams =
        extract_rank_one(solve_sdr(build_sdr(ch, sc, cfg)), ch, cfg);
    const Eigen::MatrixXcd r = TransmitCovariance::from_beams(beams.w, beams.r_s).r;
    const double full =
        fim_crb_for(ch, r, sc.beta, cfg.slots, cfg.sigmas_sq).trace_crb;
    const double half =
        fim_crb_for(ch, r, sc.beta, cfg.slots / 2, cfg.sigmas_sq).trace_crb;
    CHECK(half == Catch::Approx(2.0 * full).epsilon(1e-10));
}

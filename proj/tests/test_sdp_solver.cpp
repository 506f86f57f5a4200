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
#include <sstream>

#include "oracles.hpp"

using namespace pass_isac;

TEST_CASE("pinning one diagonal entry of a trace-minimal PSD matrix") {
    ConicProblem prob;
    const int b = prob.add_block(2, "X");
    prob.add_objective(b, Eigen::Matrix2d::Identity());
    auto &row = prob.add_row(1.0);
    Eigen::Matrix2d e00 = Eigen::Matrix2d::Zero();
    e00(0, 0) = 1.0;
    prob.add_term(row, b, e00);

    const SdpSolution sol = solve_sdp(prob);
    CHECK(sol.pobj == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(sol.x[0](0, 0) == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(sol.x[0](1, 1)) <= 1e-6);
}

TEST_CASE("diagonal blocks reduce to linear programming") {
    // min x0 + 2 x1 s.t. x0 + x1 = 1, x >= 0  ->  x = (1, 0), value 1.
    ConicProblem prob;
    const int b0 = prob.add_block(1, "x0");
    const int b1 = prob.add_block(1, "x1");
    prob.add_objective(b0, Eigen::MatrixXd::Identity(1, 1));
    prob.add_objective(b1, 2.0 * Eigen::MatrixXd::Identity(1, 1));
    auto &row = prob.add_row(1.0);
    prob.add_term(row, b0, Eigen::MatrixXd::Identity(1, 1));
    prob.add_term(row, b1, Eigen::MatrixXd::Identity(1, 1));
    const SdpSolution sol = solve_sdp(prob);
    CHECK(sol.pobj == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(sol.x[0](0, 0) == Catch::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("random KKT-constructed programs recover the planted optimum") {
    Rng rng(101);
    for (int inst_i = 0; inst_i < 30; ++inst_i) {
        const int blocks = 1 + static_cast<int>(rng.uniform() * 3);
        const int rows = 2 + static_cast<int>(rng.uniform() * 6);
        const auto inst = oracles::random_kkt_sdp(rng, blocks, 5, rows);
        const SdpSolution sol = solve_sdp(inst.prob);
        const double scale = std::max(1.0, std::abs(inst.opt_value));
        CHECK(std::abs(sol.pobj - inst.opt_value) <= 1e-6 * scale);
        CHECK(std::abs(sol.dobj - inst.opt_value) <= 1e-6 * scale);
        // Primal feasibility from scratch.
        for (const auto &row : inst.prob.rows()) {
            double v = 0.0;
            for (const auto &t : row.terms)
                v += t.coeff.cwiseProduct(sol.x[static_cast<std::size_t>(t.block)]).sum();
            CHECK(std::abs(v - row.rhs) <= 1e-6 * (1.0 + std::abs(row.rhs)));
        }
        for (const auto &x : sol.x) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
            CHECK(es.eigenvalues().minCoeff() >= -1e-8 * (1.0 + x.norm()));
        }
    }
}

TEST_CASE("solver reports duality metrics") {
    Rng rng(103);
    const auto inst = oracles::random_kkt_sdp(rng, 2, 4, 5);
    const SdpSolution sol = solve_sdp(inst.prob);
    CHECK(sol.rel_gap <= 1e-7);
    CHECK(sol.primal_res <= 1e-8);
    CHECK(sol.dual_res <= 1e-8);
    CHECK(sol.iterations < 200);
}

TEST_CASE("sparse text dump lists blocks, entries, and right-hand sides") {
    ConicProblem prob;
    const int b = prob.add_block(2, "X");
    prob.add_objective(b, Eigen::Matrix2d::Identity());
    auto &row = prob.add_row(3.5);
    Eigen::Matrix2d a;
    a << 1.0, 0.25, 0.25, 0.0;
    prob.add_term(row, b, a);

    std::ostringstream os;
    prob.write_sparse(os);
    const std::string dump = os.str();
    CHECK(dump.find("blocks 1") != std::string::npos);
    CHECK(dump.find("dim 0 2 X") != std::string::npos);
    CHECK(dump.find("obj 0 0 0 1") != std::string::npos);
    CHECK(dump.find("con 0 0 0 1 0.25") != std::string::npos);
    CHECK(dump.find("rhs 0 3.5") != std::string::npos);
}

TEST_CASE("inconsistent problems are rejected") {
    ConicProblem prob;
    prob.add_block(2, "X");
    auto &row = prob.add_row(0.0);
    prob.add_term(row, 0, Eigen::Matrix3d::Identity()); // wrong dimension
    CHECK_THROWS_AS(prob.check_consistent(), Error);
}

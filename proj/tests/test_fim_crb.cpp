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

#include "oracles.hpp"

using namespace pass_isac;

namespace {

struct Instance {
    SystemConfig cfg;
    PassLayout layout;
    Scenario sc;
    ChannelSet ch;
};

Instance random_instance(Rng &rng, std::uint64_t idx) {
    Instance inst;
    inst.cfg = oracles::default_config();
    inst.cfg.rng_seed = 5000 + idx;
    inst.cfg.finalize();
    inst.layout = random_layout(inst.cfg, rng);
    inst.sc = sample_scenario(inst.cfg, idx);
    inst.ch = effective_channels(inst.layout, inst.sc, inst.cfg);
    return inst;
}

} // namespace

TEST_CASE("transmit covariance audits") {
    Rng rng(11);
    const Eigen::MatrixXcd w = oracles::random_complex(rng, 4, 3) * 0.3;
    const Eigen::MatrixXcd rs = oracles::random_hermitian_psd(rng, 4) * 0.1;
    TransmitCovariance tc = TransmitCovariance::from_beams(w, rs);
    CHECK_NOTHROW(tc.validate(1e6));
    CHECK_THROWS(tc.validate(1e-9)); // power budget exceeded

    TransmitCovariance bad;
    bad.r = oracles::random_complex(rng, 4, 4); // not Hermitian
    CHECK_THROWS(bad.validate(1e6));
}

TEST_CASE("A matrix is a rank-one outer product with product-rule derivatives") {
    Rng rng(13);
    const Instance inst = random_instance(rng, 1);
    const AMatrices am = a_matrix_and_derivatives(inst.ch);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(am.a);
    REQUIRE(svd.singularValues().size() >= 2);
    CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));

    const oracles::ChannelFd fd = oracles::channel_fd(inst.layout, inst.sc, inst.cfg);
    CHECK(oracles::rel_err(am.ax, fd.da_dx) <= 1e-5);
    CHECK(oracles::rel_err(am.ay, fd.da_dy) <= 1e-5);
}

TEST_CASE("boresight target decouples the steering term of Adot_x") {
    SystemConfig cfg = oracles::default_config();
    cfg.finalize();
    Rng rng(17);
    PassLayout layout = random_layout(cfg, rng);
    Scenario sc = sample_scenario(cfg, 2);
    sc.target.y = 0.0; // dtheta/dx vanishes on the boresight ray
    const ChannelSet ch = effective_channels(layout, sc, cfg);
    const AMatrices am = a_matrix_and_derivatives(ch);
    const Eigen::MatrixXcd want = ch.steer * ch.dh_target_dx.adjoint();
    CHECK(oracles::rel_err(am.ax, want) <= 1e-12);
}

TEST_CASE("FIM blocks: zero reflection, slot scaling") {
    Rng rng(19);
    const Instance inst = random_instance(rng, 3);
    const AMatrices am = a_matrix_and_derivatives(inst.ch);
    const Eigen::MatrixXcd r = oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);

    SECTION("beta = 0 kills the positional blocks") {
        const FimCrb f = fim_blocks(am, r, cplx{0.0, 0.0}, 256, 1e-12);
        CHECK(f.j11.norm() == 0.0);
        CHECK(f.j12.norm() == 0.0);
        CHECK(f.j22(0, 0) >= 0.0);
    }
    SECTION("doubling T doubles every entry") {
        const FimCrb f1 = fim_blocks(am, r, inst.sc.beta, 128, 1e-12);
        const FimCrb f2 = fim_blocks(am, r, inst.sc.beta, 256, 1e-12);
        CHECK((f2.j - 2.0 * f1.j).norm() <= 1e-12 * f1.j.norm());
    }
    SECTION("J is symmetric and PSD") {
        const FimCrb f = fim_blocks(am, r, inst.sc.beta, 256, 1e-12);
        CHECK((f.j - f.j.transpose()).norm() <= 1e-10 * f.j.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(f.j);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * f.j.norm());
    }
}

TEST_CASE("FIM matches the brute-force vectorized derivative oracle") {
    Rng rng(23);
    for (int inst_i = 0; inst_i < 50; ++inst_i) {
        const int m_r = 2 + static_cast<int>(rng.uniform() * 6);
        const int n = 1 + static_cast<int>(rng.uniform() * 5);
        const int t_slots = 4;
        const Eigen::MatrixXcd a = oracles::random_complex(rng, m_r, n);
        const Eigen::MatrixXcd ax = oracles::random_complex(rng, m_r, n);
        const Eigen::MatrixXcd ay = oracles::random_complex(rng, m_r, n);
        const Eigen::MatrixXcd s = oracles::random_complex(rng, n, t_slots);
        const cplx beta = rng.cnormal();
        const double sigmas_sq = 0.5 + rng.uniform();

        const Eigen::Matrix4d want = oracles::fim_bruteforce(a, ax, ay, s, beta, sigmas_sq);
        const Eigen::MatrixXcd r_sample = (s * s.adjoint()) / t_slots;
        AMatrices am;
        am.a = a;
        am.ax = ax;
        am.ay = ay;
        const FimCrb got = fim_blocks(am, r_sample, beta, t_slots, sigmas_sq);
        CHECK((got.j - want).norm() <= 1e-8 * want.norm());
    }
}

TEST_CASE("CRB from FIM") {
    SECTION("block-diagonal FIM inverts the positional block alone") {
        FimCrb f;
        f.j11 << 4.0, 0.0, 0.0, 1.0;
        f.j12.setZero();
        f.j22 = 2.0 * Eigen::Matrix2d::Identity();
        const FimCrb done = crb_from_fim(f);
        CHECK(done.trace_crb == Catch::Approx(1.25));
        CHECK(done.rcrb == Catch::Approx(std::sqrt(1.25)));
    }
    SECTION("scaling the covariance scales the bound inversely") {
        Rng rng(29);
        const Instance inst = random_instance(rng, 4);
        const AMatrices am = a_matrix_and_derivatives(inst.ch);
        const Eigen::MatrixXcd r = oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);
        const FimCrb f1 = crb_from_fim(fim_blocks(am, r, inst.sc.beta, 256, 1e-12));
        const FimCrb f2 = crb_from_fim(fim_blocks(am, 2.0 * r, inst.sc.beta, 256, 1e-12));
        CHECK(f2.trace_crb == Catch::Approx(0.5 * f1.trace_crb).epsilon(1e-10));
        CHECK(f2.rcrb == Catch::Approx(f1.rcrb / std::sqrt(2.0)).epsilon(1e-10));
    }
    SECTION("singular information throws") {
        FimCrb f; // all zero
        CHECK_THROWS_AS(crb_from_fim(f), SingularFim);
    }
}

TEST_CASE("trace CRB is invariant to the reflection phase") {
    Rng rng(31);
    const Instance inst = random_instance(rng, 5);
    const AMatrices am = a_matrix_and_derivatives(inst.ch);
    const Eigen::MatrixXcd r = oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);
    const double base =
        crb_from_fim(fim_blocks(am, r, inst.sc.beta, 256, 1e-12)).trace_crb;
    for (int i = 0; i < 20; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const cplx rotated = inst.sc.beta * cplx{std::cos(phi), std::sin(phi)};
        const double got =
            crb_from_fim(fim_blocks(am, r, rotated, 256, 1e-12)).trace_crb;
        CHECK(std::abs(got - base) <= 1e-9 * base);
    }
}

TEST_CASE("CRB decreases when the covariance grows") {
    Rng rng(37);
    const Instance inst = random_instance(rng, 6);
    const AMatrices am = a_matrix_and_derivatives(inst.ch);
    const Eigen::MatrixXcd r = oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);
    const double base = crb_from_fim(fim_blocks(am, r, inst.sc.beta, 256, 1e-12)).trace_crb;
    const Eigen::MatrixXcd bumped =
        r + 0.1 * r.trace().real() *
                Eigen::MatrixXcd::Identity(r.rows(), r.cols());
    const double grown =
        crb_from_fim(fim_blocks(am, bumped, inst.sc.beta, 256, 1e-12)).trace_crb;
    CHECK(grown < base);
}

TEST_CASE("Schur-complement trace equals the positional block of J^-1") {
    Rng rng(41);
    for (int i = 0; i < 10; ++i) {
        const Instance inst = random_instance(rng, 10 + i);
        const AMatrices am = a_matrix_and_derivatives(inst.ch);
        const Eigen::MatrixXcd r =
            oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);
        FimCrb f;
        try {
            f = crb_from_fim(fim_blocks(am, r, inst.sc.beta, 256, 1e-12));
        } catch (const SingularFim &) {
            continue;
        }
        const Eigen::Matrix4d j_inv = f.j.inverse();
        const double via_full = j_inv(0, 0) + j_inv(1, 1);
        CHECK(f.trace_crb == Catch::Approx(via_full).epsilon(1e-8));
    }
}

TEST_CASE("fast evaluator agrees with the matrix path") {
    Rng rng(43);
    for (int i = 0; i < 30; ++i) {
        const Instance inst = random_instance(rng, 40 + i);
        const Eigen::MatrixXcd r =
            oracles::random_hermitian_psd(rng, inst.cfg.num_waveguides);
        const CrbEvaluator eval(inst.ch.steer, inst.ch.dsteer_dx, inst.ch.dsteer_dy, r,
                                inst.sc.beta, inst.cfg.slots, inst.cfg.sigmas_sq);
        const double fast =
            eval.trace_crb(inst.ch.h_target, inst.ch.dh_target_dx, inst.ch.dh_target_dy);
        const double slow = crb_from_fim(fim_blocks(a_matrix_and_derivatives(inst.ch), r,
                                                    inst.sc.beta, inst.cfg.slots,
                                                    inst.cfg.sigmas_sq))
                                .trace_crb;
        CHECK(fast == Catch::Approx(slow).epsilon(1e-10));
    }
}

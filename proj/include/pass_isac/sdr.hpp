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

#include <Eigen/Dense>
#include <vector>

#include "fim.hpp"
#include "sdp.hpp"

namespace pass_isac {

// Hermitian H -> [[Re H, -Im H], [Im H, Re H]]; symmetric iff H is Hermitian.
// Traces double and real inner products double under this map, which the
// builder compensates with explicit 1/2 factors.
inline Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd &h) {
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = h.real();
    e.topRightCorner(n, n) = -h.imag();
    e.bottomLeftCorner(n, n) = h.imag();
    e.bottomRightCorner(n, n) = h.real();
    return e;
}

// Inverse of the embedding, averaged over the rotation symmetry of the
// embedded space so the result is exactly Hermitian.
inline Eigen::MatrixXcd unembed_hermitian(const Eigen::MatrixXd &x) {
    const Eigen::Index n = x.rows() / 2;
    const Eigen::MatrixXd re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
    const Eigen::MatrixXd im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
    Eigen::MatrixXcd h = re.cast<cplx>() + j_unit * im.cast<cplx>();
    return 0.5 * (h + h.adjoint()).eval();
}

// Digital-beamforming solution: communication beamformers and the dedicated
// sensing covariance, plus a from-scratch feasibility audit.
struct FeasibilityReport {
    Eigen::VectorXd sinr;
    double power_used = 0.0;
    bool ok = false;
};

struct BeamformingSolution {
    Eigen::MatrixXcd w;   // N x K
    Eigen::MatrixXcd r_s; // N x N Hermitian PSD
    double objective = 0.0; // tr(U^-1) at the optimum [m^2]
    FeasibilityReport report;
};

struct RawSdrSolution {
    Eigen::Matrix2d u = Eigen::Matrix2d::Zero();
    std::vector<Eigen::MatrixXcd> w_mats; // K relaxed beamformer Grams, N x N
    Eigen::MatrixXcd r_s;
    double objective = 0.0;
    double feas_margin = 0.0;
    SdpSolution stats;
};

// Cone program for the beamforming subproblem, together with the scalings
// needed to map solver blocks back to physical units.
//
// Variables (PSD blocks): U (2x2), V (2x2, epigraph of tr(U^-1)),
// S_epi = [[V, I], [I, U]], S_lmi = [[J11 - U, J12], [J12^T, J22]],
// one block per relaxed beamformer W_k, the sensing covariance R_s, and one
// slack scalar per inequality. Complex Hermitian unknowns ride through the
// real embedding above; with `complex_mode == false` the channels are taken
// as real and blocks shrink to N x N.
struct SdrProblem {
    ConicProblem conic;
    bool complex_mode = true;
    int n_dim = 0;
    int k_users = 0;
    double power = 1.0;
    double chan_scale = 1.0;
    double d1 = 1.0, d2 = 1.0; // FIM row scalings, diag(d1, d1, d2, d2)
    double sigma0_scaled = 0.0;
    double ref_schur_cond = 0.0; // positional-information conditioning at R_ref
    Eigen::MatrixXcd h_scaled;   // N x K
    std::vector<double> gamma;
    int blk_u = -1, blk_v = -1, blk_epi = -1, blk_lmi = -1, blk_rs = -1;
    std::vector<int> blk_w;

    int var_dim() const { return complex_mode ? 2 * n_dim : n_dim; }

    // Coefficient acting on a covariance block so that
    // <coeff, X_block> = Re tr(herm * R) in physical (descaled) units.
    Eigen::MatrixXd cov_coeff(const Eigen::MatrixXcd &herm) const {
        if (complex_mode)
            return 0.5 * embed_hermitian(herm);
        return (0.5 * (herm.real() + herm.real().transpose())).eval();
    }

    Eigen::MatrixXd trace_coeff() const {
        if (complex_mode)
            return 0.5 * Eigen::MatrixXd::Identity(2 * n_dim, 2 * n_dim);
        return Eigen::MatrixXd::Identity(n_dim, n_dim);
    }

    Eigen::MatrixXcd block_as_cov(const Eigen::MatrixXd &x) const {
        if (complex_mode)
            return power * unembed_hermitian(x);
        return power * (0.5 * (x + x.transpose())).cast<cplx>().eval();
    }
};

namespace detail {

inline Eigen::MatrixXd entry_basis(int dim, int p, int q) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
    if (p == q) {
        e(p, p) = 1.0;
    } else {
        e(p, q) = 0.5;
        e(q, p) = 0.5;
    }
    return e; // <e, S> = S_pq for symmetric S
}

inline Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd &g) {
    return 0.5 * (g + g.adjoint());
}

} // namespace detail

// Assemble the semidefinite relaxation of the CRB-minimizing beamforming
// subproblem at the given channels. The objective is min tr(V) with the
// Schur-complement epigraph [[V, I], [I, U]] >= 0, the information-matrix
// LMI [[J11 - U, J12], [J12^T, J22]] >= 0 (all J blocks linear in
// R = sum_k W_k + R_s), per-user SINR rows, and the power budget.
inline SdrProblem build_sdr(const ChannelSet &ch, const Scenario &sc,
                            const SystemConfig &cfg, bool force_real = false) {
    SdrProblem sp;
    sp.complex_mode = !force_real;
    sp.n_dim = static_cast<int>(ch.h_target.size());
    sp.k_users = static_cast<int>(ch.h_users.cols());
    sp.power = cfg.power;
    sp.gamma = cfg.gamma;

    // Channel scale normalizes the SINR rows; the power scale puts the
    // covariance blocks in units of P.
    double s_h = 0.0;
    for (int k = 0; k < sp.k_users; ++k)
        s_h = std::max(s_h, ch.h_users.col(k).norm());
    if (!(s_h > 0.0))
        s_h = std::max(ch.h_target.norm(), 1e-300);
    sp.chan_scale = s_h;
    sp.h_scaled = ch.h_users / s_h;
    sp.sigma0_scaled = cfg.sigma0_sq / (s_h * s_h * cfg.power);

    const AMatrices am = a_matrix_and_derivatives(ch);

    // FIM row scalings from a reference isotropic covariance.
    const Eigen::MatrixXcd r_ref =
        (cfg.power / sp.n_dim) * Eigen::MatrixXcd::Identity(sp.n_dim, sp.n_dim);
    const FimCrb f_ref = fim_blocks(am, r_ref, sc.beta, cfg.slots, cfg.sigmas_sq);
    const double j11_ref = 0.5 * (f_ref.j11(0, 0) + f_ref.j11(1, 1));
    const double j22_ref = f_ref.j22(0, 0);
    sp.d1 = 1.0 / std::sqrt(std::max(j11_ref, 1e-300));
    sp.d2 = 1.0 / std::sqrt(std::max(j22_ref, 1e-300));
    {
        Eigen::Matrix2d schur = f_ref.j11;
        if (j22_ref > 0.0)
            schur -= f_ref.j12 * f_ref.j12.transpose() / j22_ref;
        const auto [lo, hi] = detail::eig2(schur);
        sp.ref_schur_cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    }

    ConicProblem &cp = sp.conic;
    sp.blk_u = cp.add_block(2, "U");
    sp.blk_v = cp.add_block(2, "V");
    sp.blk_epi = cp.add_block(4, "EPI");
    sp.blk_lmi = cp.add_block(4, "LMI");
    const int vd = sp.var_dim();
    for (int k = 0; k < sp.k_users; ++k)
        sp.blk_w.push_back(cp.add_block(vd, "W" + std::to_string(k)));
    sp.blk_rs = cp.add_block(vd, "Rs");
    std::vector<int> blk_slack;
    for (int k = 0; k < sp.k_users; ++k)
        blk_slack.push_back(cp.add_block(1, "s_sinr" + std::to_string(k)));
    const int blk_spow = cp.add_block(1, "s_pow");

    cp.add_objective(sp.blk_v, Eigen::Matrix2d::Identity());

    // Epigraph structure rows: S_epi == [[V, I], [I, U]].
    for (int p = 0; p < 2; ++p) {
        for (int q = p; q < 2; ++q) {
            auto &row_v = cp.add_row(0.0);
            cp.add_term(row_v, sp.blk_epi, detail::entry_basis(4, p, q));
            cp.add_term(row_v, sp.blk_v, -detail::entry_basis(2, p, q));
            auto &row_u = cp.add_row(0.0);
            cp.add_term(row_u, sp.blk_epi, detail::entry_basis(4, p + 2, q + 2));
            cp.add_term(row_u, sp.blk_u, -detail::entry_basis(2, p, q));
        }
    }
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            auto &row = cp.add_row(p == q ? 1.0 : 0.0);
            cp.add_term(row, sp.blk_epi, detail::entry_basis(4, p, q + 2));
        }
    }

    // Information-matrix LMI rows. Every J entry is Re tr(G R) for a fixed
    // complex G; scaled entries use J' = D J D with D = diag(d1, d1, d2, d2)
    // and covariance blocks in units of P.
    const double c2 = 2.0 * cfg.slots / cfg.sigmas_sq;
    const double c1 = c2 * std::norm(sc.beta);
    const Eigen::MatrixXcd adots[2] = {am.ax, am.ay};

    auto add_cov_terms = [&](ConicProblem::Row &row, const Eigen::MatrixXcd &herm,
                             double scale) {
        const Eigen::MatrixXd coeff = sp.cov_coeff((-scale) * herm);
        for (int k = 0; k < sp.k_users; ++k)
            cp.add_term(row, sp.blk_w[static_cast<std::size_t>(k)], coeff);
        cp.add_term(row, sp.blk_rs, coeff);
    };

    for (int p = 0; p < 2; ++p) {
        for (int q = p; q < 2; ++q) { // J11 region: S + U' - J11'(R) = 0
            auto &row = cp.add_row(0.0);
            cp.add_term(row, sp.blk_lmi, detail::entry_basis(4, p, q));
            cp.add_term(row, sp.blk_u, detail::entry_basis(2, p, q));
            const Eigen::MatrixXcd g =
                detail::hermitian_part(adots[p].adjoint() * adots[q]);
            add_cov_terms(row, g, c1 * sp.d1 * sp.d1 * sp.power);
        }
    }
    for (int p = 0; p < 2; ++p) {
        // z_p = tr(Adot_p^H A R); J12 columns couple through beta* and j beta*.
        const Eigen::MatrixXcd g_base = adots[p].adjoint() * am.a;
        const Eigen::MatrixXcd g_re = detail::hermitian_part(std::conj(sc.beta) * g_base);
        const Eigen::MatrixXcd g_im =
            detail::hermitian_part(j_unit * std::conj(sc.beta) * g_base);
        for (int q = 0; q < 2; ++q) {
            auto &row = cp.add_row(0.0);
            cp.add_term(row, sp.blk_lmi, detail::entry_basis(4, p, q + 2));
            add_cov_terms(row, q == 0 ? g_re : g_im, c2 * sp.d1 * sp.d2 * sp.power);
        }
    }
    {
        const Eigen::MatrixXcd g22 = am.a.adjoint() * am.a;
        for (int p = 0; p < 2; ++p) {
            auto &row = cp.add_row(0.0);
            cp.add_term(row, sp.blk_lmi, detail::entry_basis(4, p + 2, p + 2));
            add_cov_terms(row, g22, c2 * sp.d2 * sp.d2 * sp.power);
        }
        auto &row = cp.add_row(0.0);
        cp.add_term(row, sp.blk_lmi, detail::entry_basis(4, 2, 3));
    }

    // SINR rows: (1/g_k) tr(hh^H W_k) - sum_{i != k} tr(hh^H W_i)
    //            - tr(hh^H R_s) - slack = sigma0^2 (scaled units).
    for (int k = 0; k < sp.k_users; ++k) {
        const Eigen::VectorXcd hk = sp.h_scaled.col(k);
        const Eigen::MatrixXcd outer = hk * hk.adjoint();
        auto &row = cp.add_row(sp.sigma0_scaled);
        for (int i = 0; i < sp.k_users; ++i) {
            const double scale = (i == k) ? 1.0 / sp.gamma[static_cast<std::size_t>(k)] : -1.0;
            cp.add_term(row, sp.blk_w[static_cast<std::size_t>(i)],
                        sp.cov_coeff(scale * outer));
        }
        cp.add_term(row, sp.blk_rs, sp.cov_coeff(-outer));
        cp.add_term(row, blk_slack[static_cast<std::size_t>(k)],
                    -Eigen::MatrixXd::Identity(1, 1));
    }

    // Power budget: sum tr(W_k) + tr(R_s) + slack = P (units of P).
    {
        auto &row = cp.add_row(1.0);
        const Eigen::MatrixXd tc = sp.trace_coeff();
        for (int k = 0; k < sp.k_users; ++k)
            cp.add_term(row, sp.blk_w[static_cast<std::size_t>(k)], tc);
        cp.add_term(row, sp.blk_rs, tc);
        cp.add_term(row, blk_spow, Eigen::MatrixXd::Identity(1, 1));
    }

    cp.check_consistent();
    return sp;
}

// Feasibility margin of the SINR system under the power budget: the optimal
// value of min s0 over { SINR_k slack + s0 >= required, power <= P }.
// Zero margin (to tolerance) means the QoS targets are attainable.
inline double sinr_feasibility_margin(const SdrProblem &sp, double tol = 1e-8) {
    if (sp.k_users == 0)
        return 0.0;
    ConicProblem cp;
    const int vd = sp.var_dim();
    std::vector<int> bw;
    for (int k = 0; k < sp.k_users; ++k)
        bw.push_back(cp.add_block(vd, "W" + std::to_string(k)));
    const int brs = cp.add_block(vd, "Rs");
    const int bs0 = cp.add_block(1, "s0");
    std::vector<int> bsl;
    for (int k = 0; k < sp.k_users; ++k)
        bsl.push_back(cp.add_block(1, "s" + std::to_string(k)));
    const int bpw = cp.add_block(1, "s_pow");

    cp.add_objective(bs0, Eigen::MatrixXd::Identity(1, 1));
    for (int k = 0; k < sp.k_users; ++k) {
        const Eigen::VectorXcd hk = sp.h_scaled.col(k);
        const Eigen::MatrixXcd outer = hk * hk.adjoint();
        auto &row = cp.add_row(sp.sigma0_scaled);
        for (int i = 0; i < sp.k_users; ++i) {
            const double scale = (i == k) ? 1.0 / sp.gamma[static_cast<std::size_t>(k)] : -1.0;
            cp.add_term(row, bw[static_cast<std::size_t>(i)], sp.cov_coeff(scale * outer));
        }
        cp.add_term(row, brs, sp.cov_coeff(-outer));
        cp.add_term(row, bs0, Eigen::MatrixXd::Identity(1, 1));
        cp.add_term(row, bsl[static_cast<std::size_t>(k)], -Eigen::MatrixXd::Identity(1, 1));
    }
    {
        auto &row = cp.add_row(1.0);
        const Eigen::MatrixXd tc = sp.trace_coeff();
        for (int k = 0; k < sp.k_users; ++k)
            cp.add_term(row, bw[static_cast<std::size_t>(k)], tc);
        cp.add_term(row, brs, tc);
        cp.add_term(row, bpw, Eigen::MatrixXd::Identity(1, 1));
    }
    SdpOptions opts;
    opts.tol = tol;
    opts.feas_tol = tol;
    const SdpSolution sol = solve_sdp(cp, opts);
    return sol.x[static_cast<std::size_t>(bs0)](0, 0);
}

// Solve the relaxation. Throws Infeasible when the SINR targets cannot be
// met under the power budget, SolverFailure on numerical breakdown (after
// one internal retry from a rescaled starting point).
inline RawSdrSolution solve_sdr(const SdrProblem &sp, double tol = 1e-7) {
    // A singular positional block makes tr(U^-1) unbounded for every
    // admissible U; the geometry simply cannot localize the target.
    if (!(sp.ref_schur_cond < 1e12))
        throw SingularFim("positional information is rank-deficient at this geometry");
    const double margin = sinr_feasibility_margin(sp, std::min(tol, 1e-8));
    if (margin > 1e-7 * std::max(1.0, sp.sigma0_scaled))
        throw Infeasible("SINR targets unattainable under the power budget");

    SdpOptions opts;
    opts.tol = tol;
    opts.feas_tol = std::min(1e-8, tol);
    SdpSolution sol;
    try {
        sol = solve_sdp(sp.conic, opts);
    } catch (const SolverFailure &) {
        SdpOptions retry = opts;
        retry.init_primal = 100.0;
        retry.init_dual = 100.0;
        sol = solve_sdp(sp.conic, retry);
    }

    RawSdrSolution raw;
    raw.stats = sol;
    raw.feas_margin = margin;
    raw.u = sol.x[static_cast<std::size_t>(sp.blk_u)] / (sp.d1 * sp.d1);
    for (int k = 0; k < sp.k_users; ++k)
        raw.w_mats.push_back(
            sp.block_as_cov(sol.x[static_cast<std::size_t>(sp.blk_w[static_cast<std::size_t>(k)])]));
    raw.r_s = sp.block_as_cov(sol.x[static_cast<std::size_t>(sp.blk_rs)]);
    raw.objective =
        sp.d1 * sp.d1 * sol.x[static_cast<std::size_t>(sp.blk_v)].trace();
    return raw;
}

// Deterministic rank-one recovery.
//
// w_k = W_k h_k / sqrt(h_k^H W_k h_k) preserves every h_k^H W h_k exactly;
// R_s = R_s^ + sum_k (W_k^ - w_k w_k^H) preserves the total covariance R, and
// each W_k^ - w_k w_k^H is PSD by a Schur-complement argument, so the
// recovered sensing covariance stays PSD up to roundoff.
inline BeamformingSolution extract_rank_one(const RawSdrSolution &raw,
                                            const ChannelSet &ch,
                                            const SystemConfig &cfg) {
    const int n = static_cast<int>(raw.r_s.rows());
    const int k_users = static_cast<int>(raw.w_mats.size());
    BeamformingSolution bs;
    bs.w = Eigen::MatrixXcd::Zero(n, k_users);
    Eigen::MatrixXcd r_total = raw.r_s;
    for (int k = 0; k < k_users; ++k)
        r_total += raw.w_mats[static_cast<std::size_t>(k)];

    bs.r_s = raw.r_s;
    for (int k = 0; k < k_users; ++k) {
        const Eigen::VectorXcd hk = ch.h_users.col(k);
        const Eigen::MatrixXcd &wk = raw.w_mats[static_cast<std::size_t>(k)];
        const double gain = std::real(hk.dot(wk * hk));
        const double tr = std::max(std::real(wk.trace()), 0.0);
        if (gain <= 1e-12 * tr || !(gain > 0.0))
            throw DegenerateBeam("user " + std::to_string(k) +
                                 " receives no power in the relaxed solution");
        bs.w.col(k) = (wk * hk) / std::sqrt(gain);
        bs.r_s += wk - bs.w.col(k) * bs.w.col(k).adjoint();
    }
    bs.r_s = 0.5 * (bs.r_s + bs.r_s.adjoint()).eval();

    // Floor tiny negative eigenvalues introduced by roundoff.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bs.r_s);
    const double min_eig = es.eigenvalues().minCoeff();
    const double tr_rs = std::max(std::real(bs.r_s.trace()), 0.0);
    if (min_eig < 0.0) {
        if (min_eig < -1e-8 * tr_rs - 1e-12)
            throw SolverFailure("recovered sensing covariance is indefinite");
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        bs.r_s = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    }

    bs.objective = raw.objective;
    bs.report.sinr = sinr_values(ch.h_users, bs.w, bs.r_s, cfg.sigma0_sq);
    bs.report.power_used =
        std::real((bs.w * bs.w.adjoint() + bs.r_s).trace());
    bs.report.ok = bs.report.power_used <= cfg.power * (1.0 + 1e-6);
    for (int k = 0; k < k_users; ++k)
        bs.report.ok = bs.report.ok &&
                       bs.report.sinr(k) >= cfg.gamma[static_cast<std::size_t>(k)] * (1.0 - 1e-6);
    return bs;
}

} // namespace pass_isac

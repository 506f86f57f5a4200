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

#include "ao.hpp"

namespace pass_isac {

struct McOptions {
    int trials = 200;
    double grid_step = 0.05;   // [m]
    double window = 0.0;       // search half-width around the truth; 0 = full area
    int refine_iters = 1;      // quadratic-fit refinement passes
    double snr_boost_db = 0.0; // raises echo SNR by lowering the sensing noise
    std::uint64_t seed_salt = 0x6d635f76616c6964ull;
};

struct McReport {
    double mse = 0.0;       // [m^2]
    double trace_crb = 0.0; // [m^2]
    double ratio = 0.0;     // mse / trace_crb
    int outliers = 0;       // trials where the estimator broke down
    int trials = 0;
};

namespace detail {

// Concentrated-likelihood scorer: with beta profiled out by least squares,
// the ML estimate maximizes |<vec(A S), vec(Y)>|^2 / ||vec(A S)||^2, which
// reduces to |a^H (Y S^H) h|^2 / (M_r h^H (S S^H) h) for A = a h^H.
struct MlScorer {
    const PassLayout &layout;
    const SystemConfig &cfg;
    Eigen::MatrixXcd ysh; // M_r x N
    Eigen::MatrixXcd ssh; // N x N

    double score(const Eigen::VectorXcd &a, const Eigen::VectorXcd &h) const {
        const cplx num = a.dot(ysh * h);
        const double den =
            static_cast<double>(cfg.rx_elements) * std::real(h.dot(ssh * h));
        if (!(den > 0.0))
            return -1.0;
        return std::norm(num) / den;
    }

    double score_at(double x, double y) const {
        Scenario probe;
        probe.target = {x, y, 0.0};
        const Eigen::MatrixXcd f = inwaveguide_matrix(layout, cfg);
        const Eigen::VectorXcd h = f * wireless_vector(layout, probe.target, cfg);
        const TargetAngle ang = target_angle(probe, cfg);
        return score(steering_vector(ang.theta, cfg.rx_elements), h);
    }
};

} // namespace detail

// Synthesize echoes, run the grid + quadratic-refinement ML estimator per
// trial, and compare the position MSE against tr(CRB) for the same noise
// level. A nonzero window restricts the search to a box around the true
// position, which measures local (ambiguity-free) estimator accuracy.
inline McReport monte_carlo_validate(const PassLayout &layout,
                                     const BeamformingSolution &beams,
                                     const Scenario &sc, const SystemConfig &cfg,
                                     const McOptions &opts = {}) {
    const int n_dim = cfg.num_waveguides;
    const int k_users = static_cast<int>(beams.w.cols());
    const int t_slots = cfg.slots;
    const double sigmas_sq = cfg.sigmas_sq * std::pow(10.0, -opts.snr_boost_db / 10.0);

    const ChannelSet ch = effective_channels(layout, sc, cfg);
    McReport rep;
    rep.trials = opts.trials;
    rep.trace_crb = fim_crb_for(ch, TransmitCovariance::from_beams(beams.w, beams.r_s).r,
                                sc.beta, t_slots, sigmas_sq)
                        .trace_crb;

    // Square root of the sensing covariance for sample synthesis.
    Eigen::MatrixXcd rs_half = Eigen::MatrixXcd::Zero(n_dim, n_dim);
    if (beams.r_s.size() > 0 && beams.r_s.norm() > 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(beams.r_s);
        rs_half = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  es.eigenvectors().adjoint();
    }

    // Candidate grid; channels and steering vectors are trial-independent.
    double x_lo = cfg.offset, x_hi = cfg.offset + cfg.area_x;
    double y_lo = -0.5 * cfg.area_y, y_hi = 0.5 * cfg.area_y;
    if (opts.window > 0.0) {
        x_lo = std::max(x_lo, sc.target.x - opts.window);
        x_hi = std::min(x_hi, sc.target.x + opts.window);
        y_lo = std::max(y_lo, sc.target.y - opts.window);
        y_hi = std::min(y_hi, sc.target.y + opts.window);
    }
    const int nx = std::max(1, static_cast<int>(std::floor((x_hi - x_lo) / opts.grid_step)) + 1);
    const int ny = std::max(1, static_cast<int>(std::floor((y_hi - y_lo) / opts.grid_step)) + 1);

    const Eigen::MatrixXcd f_mat = inwaveguide_matrix(layout, cfg);
    std::vector<Eigen::VectorXcd> cand_h(static_cast<std::size_t>(nx) * ny);
    std::vector<Eigen::VectorXcd> cand_a(static_cast<std::size_t>(nx) * ny);
    std::vector<double> cand_x(static_cast<std::size_t>(nx) * ny),
        cand_y(static_cast<std::size_t>(nx) * ny);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            const std::size_t idx = static_cast<std::size_t>(ix) * ny + iy;
            const double x = x_lo + ix * opts.grid_step;
            const double y = y_lo + iy * opts.grid_step;
            cand_x[idx] = x;
            cand_y[idx] = y;
            Scenario probe;
            probe.target = {x, y, 0.0};
            cand_h[idx] = f_mat * wireless_vector(layout, probe.target, cfg);
            const TargetAngle ang = target_angle(probe, cfg);
            cand_a[idx] = steering_vector(ang.theta, cfg.rx_elements);
        }
    }

    double err_sq_sum = 0.0;
    int good_trials = 0;
    for (int trial = 0; trial < opts.trials; ++trial) {
        Rng rng = Rng::stream(cfg.rng_seed ^ opts.seed_salt,
                              static_cast<std::uint64_t>(trial));
        Eigen::MatrixXcd s(n_dim, t_slots);
        {
            Eigen::MatrixXcd comm = Eigen::MatrixXcd::Zero(n_dim, t_slots);
            if (k_users > 0) {
                Eigen::MatrixXcd c(k_users, t_slots);
                for (int t = 0; t < t_slots; ++t)
                    for (int k = 0; k < k_users; ++k)
                        c(k, t) = rng.cnormal();
                comm = beams.w * c;
            }
            Eigen::MatrixXcd g(n_dim, t_slots);
            for (int t = 0; t < t_slots; ++t)
                for (int n = 0; n < n_dim; ++n)
                    g(n, t) = rng.cnormal();
            s = comm + rs_half * g;
        }
        const Eigen::MatrixXcd a_true = ch.steer * ch.h_target.adjoint();
        Eigen::MatrixXcd y_echo = sc.beta * (a_true * s);
        const double noise_std = std::sqrt(sigmas_sq);
        for (int t = 0; t < t_slots; ++t)
            for (int i = 0; i < cfg.rx_elements; ++i)
                y_echo(i, t) += noise_std * rng.cnormal();

        detail::MlScorer scorer{layout, cfg, y_echo * s.adjoint(), s * s.adjoint()};

        double best = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t idx = 0; idx < cand_h.size(); ++idx) {
            const double v = scorer.score(cand_a[idx], cand_h[idx]);
            if (v > best) {
                best = v;
                best_idx = idx;
            }
        }
        if (!(best > 0.0)) {
            ++rep.outliers;
            continue;
        }

        // Iterated 3x3 quadratic peak fit on the log score (the local
        // log-likelihood is asymptotically quadratic). The stencil shrinks
        // only once the fitted peak is interior, so a skewed surface cannot
        // strand the estimate mid-walk.
        double ex = cand_x[best_idx], ey = cand_y[best_idx];
        double step = opts.grid_step;
        bool bad = false;
        for (int pass = 0; pass < opts.refine_iters && !bad; ++pass) {
            double f9[3][3];
            bool positive = true;
            for (int ix = -1; ix <= 1; ++ix)
                for (int iy = -1; iy <= 1; ++iy) {
                    const double v = scorer.score_at(ex + ix * step, ey + iy * step);
                    positive = positive && v > 0.0;
                    f9[ix + 1][iy + 1] = v > 0.0 ? std::log(v) : 0.0;
                }
            if (!positive) {
                step *= 0.5;
                continue;
            }
            double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
            for (int ix = -1; ix <= 1; ++ix) {
                for (int iy = -1; iy <= 1; ++iy) {
                    const double v = f9[ix + 1][iy + 1];
                    c1 += v * ix;
                    c2 += v * iy;
                    c3 += v * (ix * ix - 2.0 / 3.0);
                    c4 += v * (iy * iy - 2.0 / 3.0);
                    c5 += v * ix * iy;
                }
            }
            c1 /= 6.0;
            c2 /= 6.0;
            c3 /= 2.0;
            c4 /= 2.0;
            c5 /= 4.0;
            const double det = 4.0 * c3 * c4 - c5 * c5;
            if (!(det > 0.0) || c3 >= 0.0) {
                step *= 0.5; // not a proper peak at this scale; just zoom
                continue;
            }
            double dx = (-2.0 * c4 * c1 + c5 * c2) / det;
            double dy = (c5 * c1 - 2.0 * c3 * c2) / det;
            if (!std::isfinite(dx) || !std::isfinite(dy)) {
                bad = true;
                break;
            }
            dx = std::clamp(dx, -1.0, 1.0);
            dy = std::clamp(dy, -1.0, 1.0);
            ex += dx * step;
            ey += dy * step;
            if (std::max(std::abs(dx), std::abs(dy)) < 0.5)
                step *= 0.5;
        }
        if (bad) {
            ++rep.outliers;
            continue;
        }
        const double dx = ex - sc.target.x, dy = ey - sc.target.y;
        err_sq_sum += dx * dx + dy * dy;
        ++good_trials;
    }

    rep.mse = good_trials > 0 ? err_sq_sum / good_trials
                              : std::numeric_limits<double>::quiet_NaN();
    rep.ratio = rep.mse / rep.trace_crb;
    return rep;
}

} // namespace pass_isac

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
#include <algorithm>
#include <optional>
#include <vector>

#include "fim.hpp"
#include "sdr.hpp"

namespace pass_isac {

// Candidate grid for the element-wise position search.
struct GridSpec {
    enum class Kind { Continuous, Discrete };
    Kind kind = Kind::Continuous;
    double coarse_step = 0.0; // 0 = lambda_c / 4
    double refine_step = 0.0; // 0 = lambda_c / 40
    int levels = 0;           // Discrete: PAs restricted to D + z L / levels
};

struct PenaltyOptions {
    double rho0 = 10.0;
    double rho_factor = 0.3;
    double rho_floor = 1e-8;
    int max_inner = 30;
    int sca_max_iters = 50;
    double sca_tol = 1e-6;
    double inner_tol = 1e-4; // combined residual vs ||H||_F per rho stage
    double final_tol = 1e-6; // combined residual for overall termination
    // An iterate counts as QoS-acceptable when every SINR reaches
    // gamma * (1 - accept_sinr_slack); the follow-up beamforming solve
    // absorbs deficits of this size when it re-optimizes for the layout.
    double accept_sinr_slack = 0.05;
    GridSpec grid;
};

// Auxiliary-variable state of the penalty reformulation.
//
// The configured penalty factor rho is dimensionless; rho_scale converts it
// to the objective's units (squared channel magnitude per squared metre) so
// that the schedule starts with the placement essentially unconstrained and
// ends with the auxiliary channels pinned to the true ones. The effective
// weight in the objective is 1 / (rho * rho_scale).
struct PenaltyState {
    Eigen::MatrixXcd q;                  // N x K
    std::vector<Eigen::MatrixXcd> q_m;   // M matrices, N x K
    double rho = 0.0;                    // dimensionless, decreasing
    double rho_scale = 1.0;              // ||H_0||_F^2 / tr(CRB)_0
    double viol_q = 0.0;                 // ||Q - sum_m Q_m||_F
    double viol_h = 0.0;                 // sum_m ||Q_m - H_m||_F
    std::vector<double> objective_trace; // tr(CRB) + penalty after each cycle
    long sweep_violations = 0;           // per-PA objective increases (expected 0)
    long feasible_iterates = 0;
    bool improved = false;
};

namespace detail {

// min ||q - t||^2  s.t.  q^H M q - 2 Re(u^H q) + c <= 0 (convex, M PSD).
// KKT: q(mu) = (I + mu M)^{-1} (t + mu u); the multiplier is bracketed by
// doubling and then bisected. Returns nullopt when even the constraint's own
// minimizer stays infeasible.
inline std::optional<Eigen::VectorXcd>
project_to_quadratic(const Eigen::VectorXcd &t, const Eigen::MatrixXcd &m,
                     const Eigen::VectorXcd &u, double c) {
    auto g = [&](const Eigen::VectorXcd &q) {
        return std::real(q.dot(m * q)) - 2.0 * std::real(u.dot(q)) + c;
    };
    if (g(t) <= 0.0)
        return t;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXcd th = es.eigenvectors().adjoint() * t;
    const Eigen::VectorXcd uh = es.eigenvectors().adjoint() * u;
    auto q_of = [&](double mu) -> Eigen::VectorXcd {
        Eigen::VectorXcd qh(th.size());
        for (Eigen::Index i = 0; i < th.size(); ++i)
            qh(i) = (th(i) + mu * uh(i)) / (1.0 + mu * lam(i));
        return es.eigenvectors() * qh;
    };

    double lo = 0.0, hi = 1.0;
    bool bracketed = false;
    for (int it = 0; it < 140; ++it) {
        if (g(q_of(hi)) <= 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if (!bracketed)
        return std::nullopt;
    for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(q_of(mid)) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return q_of(hi); // feasible side of the bracket
}

} // namespace detail

// SCA projection of the auxiliary channel matrix Q onto the convexified SINR
// set, targeting sum_m Q_m. The expansion point starts at the current Q
// (feasible by induction) and is re-centered at the true channels if a
// surrogate ever turns infeasible.
inline void update_Q(PenaltyState &state, const Eigen::MatrixXcd &w,
                     const Eigen::MatrixXcd &r_s, const Eigen::MatrixXcd &h_true,
                     const SystemConfig &cfg, int sca_iters, double sca_tol = 1e-6) {
    const int k_count = static_cast<int>(state.q.cols());
    if (k_count == 0)
        return;
    Eigen::MatrixXcd target = state.q_m[0];
    for (std::size_t m = 1; m < state.q_m.size(); ++m)
        target += state.q_m[m];

    // Per-user interference-plus-sensing Gram matrices are fixed across SCA.
    std::vector<Eigen::MatrixXcd> m_mats(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        Eigen::MatrixXcd mk = r_s;
        for (int i = 0; i < k_count; ++i)
            if (i != k)
                mk += w.col(i) * w.col(i).adjoint();
        m_mats[static_cast<std::size_t>(k)] = 0.5 * (mk + mk.adjoint());
    }

    Eigen::MatrixXcd q = state.q;
    for (int iter = 0; iter < sca_iters; ++iter) {
        Eigen::MatrixXcd q_next = q;
        for (int k = 0; k < k_count; ++k) {
            const double inv_gamma = 1.0 / cfg.gamma[static_cast<std::size_t>(k)];
            const Eigen::VectorXcd wk = w.col(k);
            auto solve_col = [&](const Eigen::VectorXcd &expand)
                -> std::optional<Eigen::VectorXcd> {
                const cplx wq = wk.dot(expand); // w_k^H q~
                const Eigen::VectorXcd u = inv_gamma * wq * wk;
                const double c = inv_gamma * std::norm(wq) + cfg.sigma0_sq;
                return detail::project_to_quadratic(
                    target.col(k), m_mats[static_cast<std::size_t>(k)], u, c);
            };
            auto qk = solve_col(q.col(k));
            if (!qk)
                qk = solve_col(h_true.col(k)); // surrogate infeasible: restart at H
            if (qk)
                q_next.col(k) = *qk;
        }
        const double delta = (q_next - q).norm();
        q = q_next;
        if (delta <= sca_tol * std::max(q.norm(), 1e-300))
            break;
    }
    state.q = q;
}

// Closed-form minimizer of ||Q - sum Q_m||^2 + sum ||Q_m - H_m||^2:
// Q_m = H_m + (Q - sum_i H_i) / (M + 1).
inline void update_Qm(PenaltyState &state, const std::vector<Eigen::MatrixXcd> &h_m) {
    const std::size_t m_count = state.q_m.size();
    Eigen::MatrixXcd h_sum = Eigen::MatrixXcd::Zero(state.q.rows(), state.q.cols());
    for (const auto &hm : h_m)
        h_sum += hm;
    const Eigen::MatrixXcd b = (state.q - h_sum) / static_cast<double>(m_count + 1);
    for (std::size_t m = 0; m < m_count; ++m)
        state.q_m[m] = h_m[m] + b;
}

namespace detail {

inline void append_grid(std::vector<double> &xs, double lo, double hi, double step) {
    for (double x = lo; x < hi + 0.5 * step; x += step)
        xs.push_back(std::min(x, hi));
}

inline std::vector<double> candidate_positions(const GridSpec &grid, double lo, double hi,
                                               double current, const SystemConfig &cfg) {
    std::vector<double> xs;
    if (grid.kind == GridSpec::Kind::Discrete) {
        const int z = std::max(grid.levels, 1);
        for (int i = 0; i <= z; ++i) {
            const double x = cfg.offset + i * cfg.length / z;
            if (x >= lo - 1e-12 && x <= hi + 1e-12)
                xs.push_back(std::clamp(x, lo, hi));
        }
    } else {
        const double step = grid.coarse_step > 0.0 ? grid.coarse_step : cfg.lambda_c() / 4.0;
        append_grid(xs, lo, hi, step);
    }
    xs.push_back(current);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

} // namespace detail

// Element-wise 1-D search over PA positions for fixed beamformers and
// auxiliary matrices. Sweeps waveguide-major; each PA keeps the candidate
// minimizing tr(CRB) + (1/rho) sum_k |[Q_m]_{nk} - [H_m]_{nk}|^2 inside
// [max(D, x_{m-1} + delta), min(D + L, x_{m+1} - delta)]. The current
// position is always a candidate, so the per-PA objective cannot increase;
// ties resolve to the smallest x.
inline PassLayout update_X(PenaltyState &state, const PassLayout &layout_in,
                           const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &r_s,
                           const Scenario &sc, const SystemConfig &cfg,
                           const GridSpec &grid) {
    PassLayout layout = layout_in;
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    const int k_count = static_cast<int>(state.q.cols());
    const double kc = cfg.kappa_c();
    const double rho_eff = state.rho * state.rho_scale;
    const double inv_rho = rho_eff > 0.0 ? 1.0 / rho_eff : 0.0;

    Eigen::MatrixXcd r_total = w * w.adjoint() + r_s;
    r_total = 0.5 * (r_total + r_total.adjoint()).eval();

    ChannelSet ch = effective_channels(layout, sc, cfg);
    const CrbEvaluator eval(ch.steer, ch.dsteer_dx, ch.dsteer_dy, r_total, sc.beta,
                            cfg.slots, cfg.sigmas_sq);
    Eigen::VectorXcd ht = ch.h_target;
    Eigen::VectorXcd hx = ch.dh_target_dx;
    Eigen::VectorXcd hy = ch.dh_target_dy;

    // Contribution of one PA at position x on waveguide n: feed phase times
    // the free-space terms toward the target and each user.
    struct Contribution {
        cplx t_val, t_ddx, t_ddy;
        Eigen::VectorXcd users;
    };
    auto contribution_at = [&](int n, double x) {
        Contribution c;
        const Position pa{x, layout.wg_y(n), layout.d_h};
        const double d = x - layout.feed_x;
        const double ph = cfg.kappa_g() * d;
        const cplx f = (1.0 / std::sqrt(static_cast<double>(m_count))) *
                       cplx{std::cos(ph), -std::sin(ph)};
        const WirelessTerm wt = wireless_term(kc, pa, sc.target);
        c.t_val = f * wt.value;
        c.t_ddx = f * wt.ddx;
        c.t_ddy = f * wt.ddy;
        c.users.resize(k_count);
        for (int k = 0; k < k_count; ++k)
            c.users(k) =
                f * wireless_coeff(kc, distance(pa, sc.users[static_cast<std::size_t>(k)]));
        return c;
    };

    for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) {
            const double lo = (m > 0) ? std::max(cfg.offset, layout.x_pos(m - 1, n) + cfg.delta)
                                      : cfg.offset;
            const double hi = (m + 1 < m_count)
                                  ? std::min(cfg.offset + cfg.length,
                                             layout.x_pos(m + 1, n) - cfg.delta)
                                  : cfg.offset + cfg.length;
            if (lo > hi + 1e-12)
                throw EmptyFeasibleInterval("no admissible position for PA");

            const double x_cur = layout.x_pos(m, n);
            const Contribution cur = contribution_at(n, x_cur);
            const Eigen::MatrixXcd &qm = state.q_m[static_cast<std::size_t>(m)];

            auto objective_at = [&](const Contribution &c) {
                const cplx saved_t = ht(n), saved_x = hx(n), saved_y = hy(n);
                ht(n) += c.t_val - cur.t_val;
                hx(n) += c.t_ddx - cur.t_ddx;
                hy(n) += c.t_ddy - cur.t_ddy;
                double obj = eval.trace_crb(ht, hx, hy);
                ht(n) = saved_t;
                hx(n) = saved_x;
                hy(n) = saved_y;
                if (inv_rho > 0.0)
                    for (int k = 0; k < k_count; ++k)
                        obj += inv_rho * std::norm(qm(n, k) - c.users(k));
                return obj;
            };

            const double cur_obj = objective_at(cur);
            double best_obj = std::numeric_limits<double>::infinity();
            double best_x = x_cur;
            Contribution best_c = cur;
            auto scan = [&](const std::vector<double> &xs) {
                for (double x : xs) {
                    const Contribution c = contribution_at(n, x);
                    const double obj = objective_at(c);
                    if (obj < best_obj) {
                        best_obj = obj;
                        best_x = x;
                        best_c = c;
                    }
                }
            };
            scan(detail::candidate_positions(grid, lo, hi, x_cur, cfg));
            if (grid.kind == GridSpec::Kind::Continuous) {
                const double coarse =
                    grid.coarse_step > 0.0 ? grid.coarse_step : cfg.lambda_c() / 4.0;
                const double fine =
                    grid.refine_step > 0.0 ? grid.refine_step : cfg.lambda_c() / 40.0;
                std::vector<double> xs;
                detail::append_grid(xs, std::max(lo, best_x - coarse),
                                    std::min(hi, best_x + coarse), fine);
                std::sort(xs.begin(), xs.end());
                scan(xs);
            }

            if (best_obj > cur_obj * (1.0 + 1e-12) + 1e-300)
                ++state.sweep_violations;

            layout.x_pos(m, n) = best_x;
            ht(n) += best_c.t_val - cur.t_val;
            hx(n) += best_c.t_ddx - cur.t_ddx;
            hy(n) += best_c.t_ddy - cur.t_ddy;
        }
    }
    validate_layout(layout, cfg);
    return layout;
}

namespace detail {

inline double combined_residual(const PenaltyState &state,
                                const std::vector<Eigen::MatrixXcd> &h_m) {
    Eigen::MatrixXcd qsum =
        Eigen::MatrixXcd::Zero(state.q.rows(), state.q.cols());
    double vh = 0.0;
    for (std::size_t m = 0; m < state.q_m.size(); ++m) {
        qsum += state.q_m[m];
        vh += (state.q_m[m] - h_m[m]).norm();
    }
    return (state.q - qsum).norm() + vh;
}

inline double trace_crb_or_inf(const ChannelSet &ch, const Eigen::MatrixXcd &r,
                               cplx beta, double slots, double sigmas_sq) {
    try {
        return fim_crb_for(ch, r, beta, slots, sigmas_sq).trace_crb;
    } catch (const SingularFim &) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace detail

// Penalty-method outer loop around the Q / Q_m / X alternation. Returns the
// layout with the best true tr(CRB) among the SINR-feasible iterates; when
// no iterate beats the input, the input layout comes back unchanged (the
// preceding beamforming step guaranteed its feasibility).
inline PassLayout penalty_loop(const PassLayout &layout_in, const Eigen::MatrixXcd &w,
                               const Eigen::MatrixXcd &r_s, const Scenario &sc,
                               const SystemConfig &cfg, const PenaltyOptions &opts = {},
                               PenaltyState *diag = nullptr) {
    PassLayout layout = layout_in;
    ChannelSet ch = effective_channels(layout, sc, cfg);
    Eigen::MatrixXcd r_total = w * w.adjoint() + r_s;
    r_total = 0.5 * (r_total + r_total.adjoint()).eval();

    PenaltyState state;
    state.q = ch.h_users;
    state.q_m = ch.per_pa;
    state.rho = opts.rho0;

    PassLayout best_layout = layout;
    double best_crb =
        detail::trace_crb_or_inf(ch, r_total, sc.beta, cfg.slots, cfg.sigmas_sq);
    {
        const double h_sq = ch.h_users.squaredNorm();
        if (std::isfinite(best_crb) && best_crb > 0.0 && h_sq > 0.0)
            state.rho_scale = h_sq / best_crb;
    }

    auto joint_objective = [&](double crb) {
        const double rho_eff = state.rho * state.rho_scale;
        if (!(rho_eff > 0.0))
            return crb;
        Eigen::MatrixXcd qsum = Eigen::MatrixXcd::Zero(state.q.rows(), state.q.cols());
        double pen = 0.0;
        for (std::size_t m = 0; m < state.q_m.size(); ++m) {
            qsum += state.q_m[m];
            pen += (state.q_m[m] - ch.per_pa[m]).squaredNorm();
        }
        pen += (state.q - qsum).squaredNorm();
        return crb + pen / rho_eff;
    };

    while (true) {
        double residual = 0.0;
        double prev_joint = std::numeric_limits<double>::infinity();
        for (int inner = 0; inner < opts.max_inner; ++inner) {
            const Eigen::MatrixXd prev_x = layout.x_pos;
            const Eigen::MatrixXcd prev_q = state.q;

            update_Q(state, w, r_s, ch.h_users, cfg, opts.sca_max_iters, opts.sca_tol);
            update_Qm(state, ch.per_pa);
            layout = update_X(state, layout, w, r_s, sc, cfg, opts.grid);
            ch = effective_channels(layout, sc, cfg);

            residual = detail::combined_residual(state, ch.per_pa);
            const double crb = detail::trace_crb_or_inf(ch, r_total, sc.beta,
                                                        cfg.slots, cfg.sigmas_sq);
            const double joint = joint_objective(crb);
            state.objective_trace.push_back(joint);

            const Eigen::VectorXd sinr = sinr_values(ch.h_users, w, r_s, cfg.sigma0_sq);
            bool feasible = true;
            for (int k = 0; k < static_cast<int>(sinr.size()); ++k)
                feasible = feasible && sinr(k) >= cfg.gamma[static_cast<std::size_t>(k)] *
                                                     (1.0 - opts.accept_sinr_slack);
            if (feasible) {
                ++state.feasible_iterates;
                if (crb < best_crb) {
                    best_crb = crb;
                    best_layout = layout;
                    state.improved = true;
                }
            }

            const double h_norm = ch.h_users.norm();
            if (residual <= opts.inner_tol * h_norm)
                break;
            const bool stalled = (layout.x_pos - prev_x).norm() < 1e-15 &&
                                 (state.q - prev_q).norm() < 1e-15;
            // The cycle is a descent method on the joint objective at fixed
            // rho; once it stops paying, move to the next penalty stage.
            const bool settled = std::isfinite(joint) && std::isfinite(prev_joint) &&
                                 prev_joint - joint <=
                                     1e-4 * std::max(std::abs(prev_joint), 1e-300);
            prev_joint = joint;
            if (stalled || settled)
                break;
        }
        const double h_norm = ch.h_users.norm();
        if (residual <= opts.final_tol * h_norm)
            break;
        state.rho *= opts.rho_factor;
        if (state.rho < opts.rho_floor)
            break;
    }

    {
        Eigen::MatrixXcd qsum = Eigen::MatrixXcd::Zero(state.q.rows(), state.q.cols());
        for (const auto &qm : state.q_m)
            qsum += qm;
        state.viol_q = (state.q - qsum).norm();
        state.viol_h = 0.0;
        for (std::size_t m = 0; m < state.q_m.size(); ++m)
            state.viol_h += (state.q_m[m] - ch.per_pa[m]).norm();
    }
    if (diag)
        *diag = state;
    return best_layout;
}

} // namespace pass_isac

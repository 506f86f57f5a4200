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
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"

namespace pass_isac {

// Linear cone program over a product of real symmetric PSD blocks:
//
//   minimize    sum_b <C_b, X_b>
//   subject to  sum_b <A_{i,b}, X_b> = rhs_i,   i = 1..m
//               X_b >= 0 (PSD) for every block b,
//
// with <A, B> = tr(A^T B). Inequalities are carried as 1x1 slack blocks.
// Block metadata records which model entity each block represents.
class ConicProblem {
  public:
    struct Term {
        int block;
        Eigen::MatrixXd coeff; // symmetric, block_dim x block_dim
    };
    struct Row {
        std::vector<Term> terms;
        double rhs = 0.0;
    };

    int add_block(int dim, std::string name) {
        block_dims_.push_back(dim);
        block_names_.push_back(std::move(name));
        return static_cast<int>(block_dims_.size()) - 1;
    }

    void add_objective(int block, const Eigen::MatrixXd &coeff) {
        objective_.push_back({block, symmetrized(coeff)});
    }

    Row &add_row(double rhs) {
        rows_.push_back({});
        rows_.back().rhs = rhs;
        return rows_.back();
    }

    void add_term(Row &row, int block, const Eigen::MatrixXd &coeff) {
        row.terms.push_back({block, symmetrized(coeff)});
    }

    int num_blocks() const { return static_cast<int>(block_dims_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int block_dim(int b) const { return block_dims_[static_cast<std::size_t>(b)]; }
    const std::string &block_name(int b) const {
        return block_names_[static_cast<std::size_t>(b)];
    }
    int block_index(const std::string &name) const {
        for (int b = 0; b < num_blocks(); ++b)
            if (block_names_[static_cast<std::size_t>(b)] == name)
                return b;
        throw Error("unknown block: " + name);
    }
    const std::vector<Row> &rows() const { return rows_; }
    const std::vector<Term> &objective() const { return objective_; }

    void check_consistent() const {
        auto check_term = [&](const Term &t) {
            if (t.block < 0 || t.block >= num_blocks())
                throw Error("constraint references an unknown block");
            const int d = block_dim(t.block);
            if (t.coeff.rows() != d || t.coeff.cols() != d)
                throw Error("coefficient dimension mismatch");
        };
        for (const auto &t : objective_)
            check_term(t);
        for (const auto &r : rows_)
            for (const auto &t : r.terms)
                check_term(t);
    }

    // Plain-text sparse dump, one entry per line, for external cross-checks:
    //   blocks <count>            followed by `dim <index> <size>` lines
    //   obj <block> <row> <col> <value>        (upper triangle only)
    //   con <constraint> <block> <row> <col> <value>
    //   rhs <constraint> <value>
    void write_sparse(std::ostream &os) const {
        os << "blocks " << num_blocks() << "\n";
        for (int b = 0; b < num_blocks(); ++b)
            os << "dim " << b << " " << block_dim(b) << " " << block_name(b) << "\n";
        auto put = [&os](const char *tag, int idx, const Term &t) {
            for (int r = 0; r < t.coeff.rows(); ++r)
                for (int c = r; c < t.coeff.cols(); ++c)
                    if (t.coeff(r, c) != 0.0) {
                        os << tag;
                        if (idx >= 0)
                            os << " " << idx;
                        os << " " << t.block << " " << r << " " << c << " "
                           << t.coeff(r, c) << "\n";
                    }
        };
        for (const auto &t : objective_)
            put("obj", -1, t);
        for (int i = 0; i < num_rows(); ++i) {
            for (const auto &t : rows_[static_cast<std::size_t>(i)].terms)
                put("con", i, t);
            os << "rhs " << i << " " << rows_[static_cast<std::size_t>(i)].rhs << "\n";
        }
    }

  private:
    static Eigen::MatrixXd symmetrized(const Eigen::MatrixXd &m) {
        return 0.5 * (m + m.transpose());
    }

    std::vector<int> block_dims_;
    std::vector<std::string> block_names_;
    std::vector<Term> objective_;
    std::vector<Row> rows_;
};

struct SdpOptions {
    double tol = 1e-7;      // relative duality gap
    double feas_tol = 1e-8; // relative primal/dual residual
    int max_iterations = 200;
    double step_fraction = 0.98;
    double init_primal = 0.0; // 0 = automatic
    double init_dual = 0.0;
};

struct SdpSolution {
    std::vector<Eigen::MatrixXd> x;
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> z;
    double pobj = 0.0;
    double dobj = 0.0;
    double rel_gap = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd sym_sqrt(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> &es,
                                double power) {
    const Eigen::VectorXd lam =
        es.eigenvalues().cwiseMax(1e-300).array().pow(power).matrix();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Largest alpha with M + alpha*D still PSD (1 = unrestricted already >= 1).
inline double step_to_boundary(const Eigen::MatrixXd &m, const Eigen::MatrixXd &d) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    Eigen::MatrixXd w;
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd li = llt.matrixL().solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
        w = li * d * li.transpose();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        const Eigen::MatrixXd mi = sym_sqrt(es, -0.5);
        w = mi * d * mi;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w + w.transpose()));
    const double lam_min = es.eigenvalues().minCoeff();
    if (lam_min >= -1e-14)
        return 1e30;
    return -1.0 / lam_min;
}

} // namespace detail

// Dense infeasible-start primal-dual interior-point method with
// Nesterov-Todd scaling and an adaptive centering parameter. Intended for
// the small block sizes this library produces; everything is dense.
inline SdpSolution solve_sdp(const ConicProblem &prob, const SdpOptions &opts = {}) {
    prob.check_consistent();
    const int m = prob.num_rows();
    const int nb = prob.num_blocks();
    double n_tot = 0.0;
    for (int b = 0; b < nb; ++b)
        n_tot += prob.block_dim(b);
    if (m == 0 || nb == 0)
        throw SolverFailure("empty problem");

    // Row-equilibrated copies of the constraint data.
    struct DenseRow {
        std::vector<int> blocks;
        std::vector<Eigen::MatrixXd> coeffs;
        double rhs;
    };
    std::vector<DenseRow> rows(static_cast<std::size_t>(m));
    Eigen::VectorXd b_vec(m);
    for (int i = 0; i < m; ++i) {
        const auto &src = prob.rows()[static_cast<std::size_t>(i)];
        double nrm = 0.0;
        for (const auto &t : src.terms)
            nrm += t.coeff.squaredNorm();
        nrm = std::sqrt(nrm);
        if (!(nrm > 0.0))
            throw SolverFailure("constraint row with no coefficients");
        auto &dst = rows[static_cast<std::size_t>(i)];
        for (const auto &t : src.terms) {
            dst.blocks.push_back(t.block);
            dst.coeffs.push_back(t.coeff / nrm);
        }
        dst.rhs = src.rhs / nrm;
        b_vec(i) = dst.rhs;
    }

    std::vector<Eigen::MatrixXd> c_mats(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b)
        c_mats[static_cast<std::size_t>(b)] =
            Eigen::MatrixXd::Zero(prob.block_dim(b), prob.block_dim(b));
    for (const auto &t : prob.objective())
        c_mats[static_cast<std::size_t>(t.block)] += t.coeff;
    double c_norm = 0.0;
    for (const auto &c : c_mats)
        c_norm += c.squaredNorm();
    c_norm = std::sqrt(c_norm);

    // Which rows touch each block, with the term index inside the row.
    std::vector<std::vector<std::pair<int, int>>> block_rows(static_cast<std::size_t>(nb));
    for (int i = 0; i < m; ++i) {
        const auto &r = rows[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < r.blocks.size(); ++t)
            block_rows[static_cast<std::size_t>(r.blocks[t])].push_back(
                {i, static_cast<int>(t)});
    }

    const double init_p = opts.init_primal > 0.0
                              ? opts.init_primal
                              : std::max(1.0, b_vec.lpNorm<Eigen::Infinity>());
    const double init_d = opts.init_dual > 0.0 ? opts.init_dual : std::max(1.0, c_norm);

    std::vector<Eigen::MatrixXd> x(static_cast<std::size_t>(nb)),
        z(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        x[static_cast<std::size_t>(b)] =
            init_p * Eigen::MatrixXd::Identity(prob.block_dim(b), prob.block_dim(b));
        z[static_cast<std::size_t>(b)] =
            init_d * Eigen::MatrixXd::Identity(prob.block_dim(b), prob.block_dim(b));
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    auto inner = [](const Eigen::MatrixXd &a, const Eigen::MatrixXd &b2) {
        return a.cwiseProduct(b2).sum();
    };
    auto apply_a = [&](const std::vector<Eigen::MatrixXd> &mats) {
        Eigen::VectorXd out(m);
        for (int i = 0; i < m; ++i) {
            const auto &r = rows[static_cast<std::size_t>(i)];
            double v = 0.0;
            for (std::size_t t = 0; t < r.blocks.size(); ++t)
                v += inner(r.coeffs[t], mats[static_cast<std::size_t>(r.blocks[t])]);
            out(i) = v;
        }
        return out;
    };
    auto apply_at = [&](const Eigen::VectorXd &yv) {
        std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(nb));
        for (int b = 0; b < nb; ++b)
            out[static_cast<std::size_t>(b)] =
                Eigen::MatrixXd::Zero(prob.block_dim(b), prob.block_dim(b));
        for (int i = 0; i < m; ++i) {
            const auto &r = rows[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < r.blocks.size(); ++t)
                out[static_cast<std::size_t>(r.blocks[t])] += yv(i) * r.coeffs[t];
        }
        return out;
    };

    SdpSolution sol;
    std::vector<Eigen::MatrixXd> w_scale(static_cast<std::size_t>(nb)),
        z_inv(static_cast<std::size_t>(nb));

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // Residuals and convergence metrics.
        const Eigen::VectorXd r_p = b_vec - apply_a(x);
        std::vector<Eigen::MatrixXd> r_d = apply_at(y);
        double mu = 0.0;
        for (int b = 0; b < nb; ++b) {
            auto &rb = r_d[static_cast<std::size_t>(b)];
            rb = c_mats[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(b)] - rb;
            mu += inner(x[static_cast<std::size_t>(b)], z[static_cast<std::size_t>(b)]);
        }
        const double gap_abs = mu;
        mu /= n_tot;

        double pobj = 0.0;
        for (int b = 0; b < nb; ++b)
            pobj += inner(c_mats[static_cast<std::size_t>(b)], x[static_cast<std::size_t>(b)]);
        const double dobj = b_vec.dot(y);
        double dres = 0.0;
        for (const auto &rb : r_d)
            dres += rb.squaredNorm();
        dres = std::sqrt(dres) / (1.0 + c_norm);
        const double pres = r_p.norm() / (1.0 + b_vec.norm());
        const double rel_gap = gap_abs / (1.0 + std::abs(pobj) + std::abs(dobj));

        sol.pobj = pobj;
        sol.dobj = dobj;
        sol.rel_gap = rel_gap;
        sol.primal_res = pres;
        sol.dual_res = dres;
        sol.iterations = iter;
        if (pres <= opts.feas_tol && dres <= opts.feas_tol && rel_gap <= opts.tol) {
            sol.x = x;
            sol.y = y;
            sol.z = z;
            return sol;
        }
        if (!std::isfinite(mu) || !std::isfinite(pres) || !std::isfinite(dres) ||
            y.lpNorm<Eigen::Infinity>() > 1e16)
            throw SolverFailure("interior-point iterates diverged");

        // Nesterov-Todd scaling point per block: W Z W = X.
        for (int b = 0; b < nb; ++b) {
            const auto &xb = x[static_cast<std::size_t>(b)];
            const auto &zb = z[static_cast<std::size_t>(b)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ez(zb);
            if (ez.eigenvalues().minCoeff() <= 0.0)
                throw SolverFailure("dual iterate lost positive definiteness");
            const Eigen::MatrixXd z_half = detail::sym_sqrt(ez, 0.5);
            const Eigen::MatrixXd z_mhalf = detail::sym_sqrt(ez, -0.5);
            z_inv[static_cast<std::size_t>(b)] = detail::sym_sqrt(ez, -1.0);
            Eigen::MatrixXd g = z_half * xb * z_half;
            g = 0.5 * (g + g.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(g);
            if (eg.eigenvalues().minCoeff() <= 0.0)
                throw SolverFailure("primal iterate lost positive definiteness");
            w_scale[static_cast<std::size_t>(b)] =
                z_mhalf * detail::sym_sqrt(eg, 0.5) * z_mhalf;
        }

        // Schur complement M_ij = sum_b <A_i, W A_j W>.
        Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
        for (int jr = 0; jr < m; ++jr) {
            const auto &r = rows[static_cast<std::size_t>(jr)];
            for (std::size_t t = 0; t < r.blocks.size(); ++t) {
                const int b = r.blocks[t];
                const auto &w = w_scale[static_cast<std::size_t>(b)];
                const Eigen::MatrixXd waw = w * r.coeffs[t] * w;
                for (const auto &[ir, it] : block_rows[static_cast<std::size_t>(b)]) {
                    if (ir > jr)
                        continue;
                    schur(ir, jr) +=
                        inner(rows[static_cast<std::size_t>(ir)].coeffs[static_cast<std::size_t>(it)], waw);
                }
            }
        }
        schur = schur.selfadjointView<Eigen::Upper>();
        Eigen::LDLT<Eigen::MatrixXd> fact(schur);
        if (fact.info() != Eigen::Success) {
            schur.diagonal().array() += 1e-12 * (1.0 + schur.diagonal().maxCoeff());
            fact.compute(schur);
            if (fact.info() != Eigen::Success)
                throw SolverFailure("Schur complement factorization failed");
        }

        // One Newton solve for a given centering target V.
        auto direction = [&](const std::vector<Eigen::MatrixXd> &v) {
            std::vector<Eigen::MatrixXd> t_mats(static_cast<std::size_t>(nb));
            for (int b = 0; b < nb; ++b) {
                const auto &w = w_scale[static_cast<std::size_t>(b)];
                t_mats[static_cast<std::size_t>(b)] =
                    v[static_cast<std::size_t>(b)] -
                    w * r_d[static_cast<std::size_t>(b)] * w;
            }
            const Eigen::VectorXd rhs = r_p - apply_a(t_mats);
            const Eigen::VectorXd dy = fact.solve(rhs);
            std::vector<Eigen::MatrixXd> at_dy = apply_at(dy);
            std::vector<Eigen::MatrixXd> dz(static_cast<std::size_t>(nb)),
                dx(static_cast<std::size_t>(nb));
            for (int b = 0; b < nb; ++b) {
                dz[static_cast<std::size_t>(b)] =
                    r_d[static_cast<std::size_t>(b)] - at_dy[static_cast<std::size_t>(b)];
                const auto &w = w_scale[static_cast<std::size_t>(b)];
                Eigen::MatrixXd d =
                    t_mats[static_cast<std::size_t>(b)] +
                    w * at_dy[static_cast<std::size_t>(b)] * w;
                dx[static_cast<std::size_t>(b)] = 0.5 * (d + d.transpose());
            }
            return std::make_tuple(dx, dy, dz);
        };

        // Predictor (affine scaling).
        std::vector<Eigen::MatrixXd> v(static_cast<std::size_t>(nb));
        for (int b = 0; b < nb; ++b)
            v[static_cast<std::size_t>(b)] = -x[static_cast<std::size_t>(b)];
        auto [dx_a, dy_a, dz_a] = direction(v);
        double ap = 1e30, ad = 1e30;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, detail::step_to_boundary(x[static_cast<std::size_t>(b)],
                                                       dx_a[static_cast<std::size_t>(b)]));
            ad = std::min(ad, detail::step_to_boundary(z[static_cast<std::size_t>(b)],
                                                       dz_a[static_cast<std::size_t>(b)]));
        }
        ap = std::min(1.0, opts.step_fraction * ap);
        ad = std::min(1.0, opts.step_fraction * ad);
        double mu_aff = 0.0;
        for (int b = 0; b < nb; ++b)
            mu_aff += inner(x[static_cast<std::size_t>(b)] + ap * dx_a[static_cast<std::size_t>(b)],
                            z[static_cast<std::size_t>(b)] + ad * dz_a[static_cast<std::size_t>(b)]);
        mu_aff = std::max(mu_aff / n_tot, 0.0);
        double sigma = std::pow(mu_aff / mu, 3);
        sigma = std::min(std::max(sigma, 1e-10), 0.99);

        // Corrector with centering.
        for (int b = 0; b < nb; ++b)
            v[static_cast<std::size_t>(b)] =
                sigma * mu * z_inv[static_cast<std::size_t>(b)] -
                x[static_cast<std::size_t>(b)];
        auto [dx, dy, dz] = direction(v);
        ap = 1e30;
        ad = 1e30;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, detail::step_to_boundary(x[static_cast<std::size_t>(b)],
                                                       dx[static_cast<std::size_t>(b)]));
            ad = std::min(ad, detail::step_to_boundary(z[static_cast<std::size_t>(b)],
                                                       dz[static_cast<std::size_t>(b)]));
        }
        ap = std::min(1.0, opts.step_fraction * ap);
        ad = std::min(1.0, opts.step_fraction * ad);
        for (int b = 0; b < nb; ++b) {
            x[static_cast<std::size_t>(b)] += ap * dx[static_cast<std::size_t>(b)];
            z[static_cast<std::size_t>(b)] += ad * dz[static_cast<std::size_t>(b)];
            x[static_cast<std::size_t>(b)] =
                0.5 * (x[static_cast<std::size_t>(b)] +
                       x[static_cast<std::size_t>(b)].transpose())
                          .eval();
            z[static_cast<std::size_t>(b)] =
                0.5 * (z[static_cast<std::size_t>(b)] +
                       z[static_cast<std::size_t>(b)].transpose())
                          .eval();
        }
        y += ad * dy;
    }
    throw SolverFailure("interior-point method did not converge");
}

} // namespace pass_isac

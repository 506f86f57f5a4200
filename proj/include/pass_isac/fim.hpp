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
#include <limits>

#include "channel.hpp"

namespace pass_isac {

// Covariance of the transmitted signal, R = W W^H + R_s.
struct TransmitCovariance {
    Eigen::MatrixXcd r;

    static TransmitCovariance from_beams(const Eigen::MatrixXcd &w,
                                         const Eigen::MatrixXcd &r_s) {
        TransmitCovariance tc;
        tc.r = w * w.adjoint() + r_s;
        tc.r = 0.5 * (tc.r + tc.r.adjoint()).eval();
        return tc;
    }

    // Hermitian / PSD / power-budget checks used by tests and post-solve audits.
    void validate(double power_budget) const {
        const double scale = std::max(1.0, r.norm());
        if ((r - r.adjoint()).norm() > 1e-12 * scale)
            throw Error("transmit covariance is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
        if (es.eigenvalues().minCoeff() < -1e-9 * std::abs(r.trace()))
            throw Error("transmit covariance is not positive semidefinite");
        if (std::real(r.trace()) > power_budget + 1e-9)
            throw Error("transmit covariance exceeds the power budget");
    }
};

// Fisher information over eta = [x_t, y_t, Re(beta), Im(beta)] and the
// derived positional bound.
struct FimCrb {
    Eigen::Matrix2d j11 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d j12 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d j22 = Eigen::Matrix2d::Zero();
    Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
    Eigen::Matrix2d crb = Eigen::Matrix2d::Zero();
    double trace_crb = 0.0; // [m^2]
    double rcrb = 0.0;      // [m]
};

struct AMatrices {
    Eigen::MatrixXcd a;  // M_r x N, a(theta) h_t^H
    Eigen::MatrixXcd ax; // d a / d x_t
    Eigen::MatrixXcd ay; // d a / d y_t
};

// Two-hop response A = a(theta) h_t^H and its target-position derivatives.
// Note the conjugate transpose on the channel derivative: d(h^H)/dx = (dh/dx)^H.
inline AMatrices a_matrix_and_derivatives(const ChannelSet &ch) {
    AMatrices m;
    m.a = ch.steer * ch.h_target.adjoint();
    m.ax = ch.dsteer_dx * ch.h_target.adjoint() + ch.steer * ch.dh_target_dx.adjoint();
    m.ay = ch.dsteer_dy * ch.h_target.adjoint() + ch.steer * ch.dh_target_dy.adjoint();
    return m;
}

// Assemble the 4x4 information matrix blocks for a coherent interval of
// `slots` snapshots with transmit covariance R:
//   J11[i][j] = (2 |b|^2 T / s^2) Re tr(Adot_j R Adot_i^H)
//   J12[i][:] = (2 T / s^2) [Re(b* z_i), -Im(b* z_i)],  z_i = tr(Adot_i^H A R)
//   J22       = (2 T / s^2) Re tr(A R A^H) I_2
inline FimCrb fim_blocks(const AMatrices &am, const Eigen::MatrixXcd &r, cplx beta,
                         double slots, double sigmas_sq) {
    const double c2 = 2.0 * slots / sigmas_sq;
    const double c1 = c2 * std::norm(beta);

    const Eigen::MatrixXcd rax = r * am.ax.adjoint(); // N x M_r
    const Eigen::MatrixXcd ray = r * am.ay.adjoint();
    const Eigen::MatrixXcd ra = r * am.a.adjoint();

    FimCrb f;
    f.j11(0, 0) = c1 * std::real((am.ax * rax).trace());
    f.j11(1, 1) = c1 * std::real((am.ay * ray).trace());
    f.j11(0, 1) = c1 * std::real((am.ay * rax).trace());
    f.j11(1, 0) = f.j11(0, 1);

    const cplx zx = (am.a * rax).trace(); // tr(A R Adot_x^H) = tr(Adot_x^H A R)
    const cplx zy = (am.a * ray).trace();
    const cplx bzx = std::conj(beta) * zx;
    const cplx bzy = std::conj(beta) * zy;
    f.j12(0, 0) = c2 * std::real(bzx);
    f.j12(0, 1) = -c2 * std::imag(bzx);
    f.j12(1, 0) = c2 * std::real(bzy);
    f.j12(1, 1) = -c2 * std::imag(bzy);

    const double paa = c2 * std::real((am.a * ra).trace());
    f.j22 = paa * Eigen::Matrix2d::Identity();

    f.j.topLeftCorner<2, 2>() = f.j11;
    f.j.topRightCorner<2, 2>() = f.j12;
    f.j.bottomLeftCorner<2, 2>() = f.j12.transpose();
    f.j.bottomRightCorner<2, 2>() = f.j22;
    return f;
}

namespace detail {

inline Eigen::Matrix2d inv2(const Eigen::Matrix2d &m, double det) {
    Eigen::Matrix2d out;
    out << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return out / det;
}

// Eigenvalues of a symmetric 2x2 matrix.
inline std::pair<double, double> eig2(const Eigen::Matrix2d &m) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
    return {0.5 * tr - disc, 0.5 * tr + disc};
}

} // namespace detail

// Invert the positional block via the Schur complement:
// CRB = (J11 - J12 J22^-1 J12^T)^-1. Throws SingularFim when the geometry
// carries no usable position information.
inline FimCrb crb_from_fim(FimCrb f) {
    const double det22 = f.j22(0, 0) * f.j22(1, 1) - f.j22(0, 1) * f.j22(1, 0);
    if (!(std::abs(det22) > 0.0))
        throw SingularFim("J22 is singular");
    const Eigen::Matrix2d schur =
        f.j11 - f.j12 * detail::inv2(f.j22, det22) * f.j12.transpose();
    const auto [lo, hi] = detail::eig2(schur);
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw SingularFim("positional information matrix is singular or ill-conditioned");
    const double det_s = schur(0, 0) * schur(1, 1) - schur(0, 1) * schur(1, 0);
    f.crb = detail::inv2(schur, det_s);
    f.trace_crb = f.crb(0, 0) + f.crb(1, 1);
    f.rcrb = std::sqrt(f.trace_crb);
    return f;
}

inline FimCrb fim_crb_for(const ChannelSet &ch, const Eigen::MatrixXcd &r, cplx beta,
                          double slots, double sigmas_sq) {
    return crb_from_fim(fim_blocks(a_matrix_and_derivatives(ch), r, beta, slots, sigmas_sq));
}

// Fast trace-of-CRB evaluation for placement search.
//
// Every FIM entry is a trace against rank-<=2 matrices built from the array
// response a and the channel h, so only six quadratic forms in h, dh/dx,
// dh/dy change per candidate position. Array-side inner products are frozen
// at construction (theta does not depend on PA positions).
class CrbEvaluator {
  public:
    CrbEvaluator(const Eigen::VectorXcd &steer, const Eigen::VectorXcd &dsteer_dx,
                 const Eigen::VectorXcd &dsteer_dy, Eigen::MatrixXcd r, cplx beta,
                 double slots, double sigmas_sq)
        : r_(std::move(r)), beta_(beta) {
        c2_ = 2.0 * slots / sigmas_sq;
        c1_ = c2_ * std::norm(beta);
        saa_ = std::real(steer.dot(steer));
        sax_ = steer.dot(dsteer_dx); // a^H ax
        say_ = steer.dot(dsteer_dy);
        sxx_ = std::real(dsteer_dx.dot(dsteer_dx));
        syy_ = std::real(dsteer_dy.dot(dsteer_dy));
        sxy_ = dsteer_dx.dot(dsteer_dy); // ax^H ay
    }

    // Returns +inf for unlocalizable candidates instead of throwing.
    double trace_crb(const Eigen::VectorXcd &h, const Eigen::VectorXcd &hx,
                     const Eigen::VectorXcd &hy) const {
        const Eigen::VectorXcd rh = r_ * h;
        const Eigen::VectorXcd rhx = r_ * hx;
        const Eigen::VectorXcd rhy = r_ * hy;
        const double q = std::real(h.dot(rh));
        const cplx qx = h.dot(rhx); // h^H R hx
        const cplx qy = h.dot(rhy);
        const double qxx = std::real(hx.dot(rhx));
        const double qyy = std::real(hy.dot(rhy));
        const cplx qxy = hx.dot(rhy); // hx^H R hy

        // tr(Adot_j R Adot_i^H) decomposed over the four rank-one products.
        const double txx = sxx_ * q + 2.0 * std::real(sax_ * qx) + saa_ * qxx;
        const double tyy = syy_ * q + 2.0 * std::real(say_ * qy) + saa_ * qyy;
        const double txy = std::real(sxy_) * q + std::real(say_ * qx) +
                           std::real(std::conj(sax_) * std::conj(qy)) +
                           saa_ * std::real(qxy);

        Eigen::Matrix2d j11;
        j11 << c1_ * txx, c1_ * txy, c1_ * txy, c1_ * tyy;

        const cplx zx = std::conj(sax_) * q + saa_ * qx; // tr(Adot_x^H A R)
        const cplx zy = std::conj(say_) * q + saa_ * qy;
        const cplx bzx = std::conj(beta_) * zx;
        const cplx bzy = std::conj(beta_) * zy;
        Eigen::Matrix2d j12;
        j12 << std::real(bzx), -std::imag(bzx), std::real(bzy), -std::imag(bzy);
        j12 *= c2_;

        const double paa = c2_ * saa_ * q;
        if (!(paa > 0.0))
            return std::numeric_limits<double>::infinity();
        const Eigen::Matrix2d schur = j11 - (j12 * j12.transpose()) / paa;
        const double det = schur(0, 0) * schur(1, 1) - schur(0, 1) * schur(1, 0);
        const double tr = schur(0, 0) + schur(1, 1);
        if (!(det > 0.0) || !(tr > 0.0))
            return std::numeric_limits<double>::infinity();
        return tr / det;
    }

    const Eigen::MatrixXcd &covariance() const { return r_; }

  private:
    Eigen::MatrixXcd r_;
    cplx beta_;
    double c1_ = 0.0, c2_ = 0.0;
    double saa_ = 0.0, sxx_ = 0.0, syy_ = 0.0;
    cplx sax_{}, say_{}, sxy_{};
};

} // namespace pass_isac

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
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace pass_isac {

// Effective channels of one (layout, scenario) pair together with the
// receive-array response and all analytic derivatives with respect to the
// target position.
struct ChannelSet {
    Eigen::MatrixXcd h_users;              // N x K, column k = channel to user k
    Eigen::VectorXcd h_target;             // N
    std::vector<Eigen::MatrixXcd> per_pa;  // M entries of N x K; sums to h_users
    Eigen::VectorXcd steer;                // M_r
    double theta = 0.0;
    double dtheta_dx = 0.0;
    double dtheta_dy = 0.0;
    Eigen::VectorXcd dh_target_dx, dh_target_dy; // N
    Eigen::VectorXcd dsteer_dx, dsteer_dy;       // M_r
};

// Free-space coefficient between a PA and a ground point:
// (2 kappa_c)^-1 e^{-j kappa_c r} / r.
inline cplx wireless_coeff(double kappa_c, double r) {
    const double amp = 1.0 / (2.0 * kappa_c * r);
    return amp * cplx{std::cos(kappa_c * r), -std::sin(kappa_c * r)};
}

// Value and target-position derivatives of the free-space coefficient.
// d/dx_t [e^{-jkr}/r] = e^{-jkr} (-jkr - 1)/r^2 * (x_t - x_pa)/r.
struct WirelessTerm {
    cplx value;
    cplx ddx;
    cplx ddy;
};

inline WirelessTerm wireless_term(double kappa_c, const Position &pa, const Position &pt) {
    const double dx = pt.x - pa.x, dy = pt.y - pa.y, dz = pt.z - pa.z;
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double amp = 1.0 / (2.0 * kappa_c);
    const cplx phase{std::cos(kappa_c * r), -std::sin(kappa_c * r)};
    WirelessTerm t;
    t.value = amp * phase / r;
    const cplx common = amp * phase * (cplx{-1.0, 0.0} - j_unit * (kappa_c * r)) / (r * r);
    t.ddx = common * (dx / r);
    t.ddy = common * (dy / r);
    return t;
}

// Stacked free-space channel from every PA to one point, waveguide-major:
// entry (n*M + m) belongs to PA m of waveguide n.
inline Eigen::VectorXcd wireless_vector(const PassLayout &layout, const Position &pt,
                                        const SystemConfig &cfg) {
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    const double kc = cfg.kappa_c();
    Eigen::VectorXcd h(m_count * n_count);
    for (int n = 0; n < n_count; ++n)
        for (int m = 0; m < m_count; ++m)
            h(n * m_count + m) =
                wireless_coeff(kc, distance(layout.pa_position(m, n), pt));
    return h;
}

// In-waveguide phase coefficient of PA (m, n): (1/sqrt(M)) e^{-j kappa_g d}.
inline cplx feed_coeff(const PassLayout &layout, const SystemConfig &cfg, int m, int n) {
    const double d = layout.feed_distance(m, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(layout.pas_per_waveguide()));
    const double ph = cfg.kappa_g() * d;
    return scale * cplx{std::cos(ph), -std::sin(ph)};
}

// Block-diagonal feed matrix F (N x MN), row n non-zero on waveguide n's PAs.
inline Eigen::MatrixXcd inwaveguide_matrix(const PassLayout &layout, const SystemConfig &cfg) {
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(n_count, m_count * n_count);
    for (int n = 0; n < n_count; ++n)
        for (int m = 0; m < m_count; ++m)
            f(n, n * m_count + m) = feed_coeff(layout, cfg, m, n);
    return f;
}

struct TargetAngle {
    double theta;
    double dtheta_dx;
    double dtheta_dy;
};

// Angle of the target seen from the receive array (boresight = +x axis,
// elements along y): sin(theta) = y_t / sqrt(x_t^2 + y_t^2).
inline TargetAngle target_angle(const Scenario &sc, const SystemConfig &) {
    const double x = sc.target.x, y = sc.target.y;
    const double rho_sq = x * x + y * y;
    const double rho = std::sqrt(rho_sq);
    if (rho < 1e-9)
        throw DegenerateGeometry("target coincides with the receive array");
    TargetAngle a;
    a.theta = std::asin(y / rho);
    a.dtheta_dx = -y / rho_sq;
    a.dtheta_dy = x / rho_sq;
    return a;
}

// Half-wavelength ULA response: entry i = e^{-j pi i sin(theta)}.
inline Eigen::VectorXcd steering_vector(double theta, int rx_elements) {
    Eigen::VectorXcd a(rx_elements);
    const double s = std::sin(theta);
    for (int i = 0; i < rx_elements; ++i) {
        const double ph = M_PI * i * s;
        a(i) = cplx{std::cos(ph), -std::sin(ph)};
    }
    return a;
}

inline Eigen::VectorXcd steering_derivative(double theta, int rx_elements) {
    Eigen::VectorXcd da(rx_elements);
    const double s = std::sin(theta), c = std::cos(theta);
    for (int i = 0; i < rx_elements; ++i) {
        const double ph = M_PI * i * s;
        da(i) = -j_unit * (M_PI * i * c) * cplx{std::cos(ph), -std::sin(ph)};
    }
    return da;
}

// Analytic d h_target / d (x_t, y_t): the free-space derivatives propagated
// through the (target-independent) feed matrix.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXcd>
target_channel_derivatives(const PassLayout &layout, const Scenario &sc,
                           const SystemConfig &cfg) {
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    const double kc = cfg.kappa_c();
    Eigen::VectorXcd ddx = Eigen::VectorXcd::Zero(n_count);
    Eigen::VectorXcd ddy = Eigen::VectorXcd::Zero(n_count);
    for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) {
            const cplx f = feed_coeff(layout, cfg, m, n);
            const WirelessTerm t = wireless_term(kc, layout.pa_position(m, n), sc.target);
            ddx(n) += f * t.ddx;
            ddy(n) += f * t.ddy;
        }
    }
    return {ddx, ddy};
}

// Build every channel quantity for one (layout, scenario) pair.
inline ChannelSet effective_channels(const PassLayout &layout, const Scenario &sc,
                                     const SystemConfig &cfg) {
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    const int k_count = static_cast<int>(sc.users.size());
    const double kc = cfg.kappa_c();

    ChannelSet ch;
    ch.h_users = Eigen::MatrixXcd::Zero(n_count, k_count);
    ch.h_target = Eigen::VectorXcd::Zero(n_count);
    ch.per_pa.assign(static_cast<std::size_t>(m_count),
                     Eigen::MatrixXcd::Zero(n_count, k_count));
    ch.dh_target_dx = Eigen::VectorXcd::Zero(n_count);
    ch.dh_target_dy = Eigen::VectorXcd::Zero(n_count);

    for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) {
            const cplx f = feed_coeff(layout, cfg, m, n);
            const Position pa = layout.pa_position(m, n);
            for (int k = 0; k < k_count; ++k) {
                const cplx v = f * wireless_coeff(kc, distance(pa, sc.users[static_cast<std::size_t>(k)]));
                ch.per_pa[static_cast<std::size_t>(m)](n, k) = v;
                ch.h_users(n, k) += v;
            }
            const WirelessTerm t = wireless_term(kc, pa, sc.target);
            ch.h_target(n) += f * t.value;
            ch.dh_target_dx(n) += f * t.ddx;
            ch.dh_target_dy(n) += f * t.ddy;
        }
    }

    const TargetAngle ang = target_angle(sc, cfg);
    ch.theta = ang.theta;
    ch.dtheta_dx = ang.dtheta_dx;
    ch.dtheta_dy = ang.dtheta_dy;
    ch.steer = steering_vector(ang.theta, cfg.rx_elements);
    const Eigen::VectorXcd da = steering_derivative(ang.theta, cfg.rx_elements);
    ch.dsteer_dx = da * ang.dtheta_dx;
    ch.dsteer_dy = da * ang.dtheta_dy;
    return ch;
}

// Per-user SINR for beamformers W (N x K) and sensing covariance R_s.
inline Eigen::VectorXd sinr_values(const Eigen::MatrixXcd &h_users,
                                   const Eigen::MatrixXcd &w,
                                   const Eigen::MatrixXcd &r_s, double sigma0_sq) {
    const int k_count = static_cast<int>(h_users.cols());
    Eigen::VectorXd out(k_count);
    for (int k = 0; k < k_count; ++k) {
        const Eigen::VectorXcd hk = h_users.col(k);
        const Eigen::VectorXcd g = w.adjoint() * hk; // g(i) = w_i^H h_k
        double interference = sigma0_sq + std::real(hk.dot(r_s * hk));
        for (int i = 0; i < k_count; ++i)
            if (i != k)
                interference += std::norm(g(i));
        out(k) = std::norm(g(k)) / interference;
    }
    return out;
}

} // namespace pass_isac

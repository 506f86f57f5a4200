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

#include "config.hpp"

namespace pass_isac {

// Pinching-antenna positions. x_pos(m, n) is the x-coordinate of the m-th PA
// on waveguide n; columns are sorted ascending with spacing >= delta.
struct PassLayout {
    Eigen::MatrixXd x_pos; // M x N
    Eigen::VectorXd wg_y;  // N
    double feed_x = 0.0;   // feed-plane x-coordinate (= offset D)
    double d_h = 0.0;

    int pas_per_waveguide() const { return static_cast<int>(x_pos.rows()); }
    int num_waveguides() const { return static_cast<int>(x_pos.cols()); }

    Position pa_position(int m, int n) const {
        return {x_pos(m, n), wg_y(n), d_h};
    }

    // In-waveguide distance from the feed point to PA (m, n).
    double feed_distance(int m, int n) const { return x_pos(m, n) - feed_x; }
};

// Re-validate the deployment constraints: D <= x <= D + L, spacing >= delta.
inline void validate_layout(const PassLayout &layout, const SystemConfig &cfg,
                            double tol = 1e-9) {
    const int m_count = layout.pas_per_waveguide();
    const int n_count = layout.num_waveguides();
    if (m_count != cfg.pas_per_waveguide || n_count != cfg.num_waveguides)
        throw InfeasibleLayout("layout dimensions do not match the config");
    if (cfg.length < (cfg.pas_per_waveguide - 1) * cfg.delta)
        throw InfeasibleLayout("waveguide too short for the required PA spacing");
    const double lo = cfg.offset - tol;
    const double hi = cfg.offset + cfg.length + tol;
    for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) {
            const double x = layout.x_pos(m, n);
            if (!(x >= lo && x <= hi))
                throw InfeasibleLayout("PA position outside the attachable range");
            if (m > 0 && layout.x_pos(m, n) - layout.x_pos(m - 1, n) < cfg.delta - tol)
                throw InfeasibleLayout("PA spacing below the minimum gap");
        }
    }
}

// Evenly spread PAs over the attachable range; waveguides evenly spaced
// across the service width.
inline PassLayout uniform_layout(const SystemConfig &cfg) {
    const int m_count = cfg.pas_per_waveguide;
    const int n_count = cfg.num_waveguides;
    if (cfg.length < (m_count - 1) * cfg.delta)
        throw InfeasibleLayout("waveguide too short for the required PA spacing");
    PassLayout layout;
    layout.x_pos.resize(m_count, n_count);
    layout.wg_y.resize(n_count);
    layout.feed_x = cfg.offset;
    layout.d_h = cfg.height;
    for (int n = 0; n < n_count; ++n) {
        layout.wg_y(n) = -0.5 * cfg.area_y + (n + 0.5) * cfg.area_y / n_count;
        for (int m = 0; m < m_count; ++m) {
            layout.x_pos(m, n) = (m_count > 1)
                                     ? cfg.offset + m * cfg.length / (m_count - 1)
                                     : cfg.offset + 0.5 * cfg.length;
        }
    }
    validate_layout(layout, cfg);
    return layout;
}

// Random feasible layout: per waveguide, sorted uniform draws with the
// minimum gap re-inserted. Used by tests and multi-start experiments.
inline PassLayout random_layout(const SystemConfig &cfg, Rng &rng) {
    const int m_count = cfg.pas_per_waveguide;
    const int n_count = cfg.num_waveguides;
    const double slack = cfg.length - (m_count - 1) * cfg.delta;
    if (slack < 0.0)
        throw InfeasibleLayout("waveguide too short for the required PA spacing");
    PassLayout layout = uniform_layout(cfg);
    for (int n = 0; n < n_count; ++n) {
        std::vector<double> u(static_cast<std::size_t>(m_count));
        for (auto &v : u)
            v = rng.uniform();
        std::sort(u.begin(), u.end());
        for (int m = 0; m < m_count; ++m)
            layout.x_pos(m, n) = cfg.offset + u[static_cast<std::size_t>(m)] * slack +
                                 m * cfg.delta;
    }
    validate_layout(layout, cfg);
    return layout;
}

} // namespace pass_isac

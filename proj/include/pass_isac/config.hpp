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

#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"

namespace pass_isac {

// 3-D point in metres. Users and the target live at z = 0, antennas at z = d_h.
struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double distance(const Position &a, const Position &b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Physical and algorithmic constants of one deployment.
//
// Geometry convention: the BS receive array sits at the origin with elements
// along the y-axis; waveguides run along x from the feed plane x = D to
// x = D + L at height d_h; the service rectangle spans x in [D, D + D_x],
// y in [-D_y/2, D_y/2] at z = 0.
struct SystemConfig {
    double f_c = 28e9;         // carrier frequency [Hz]
    double c = 299792458.0;    // propagation speed [m/s]
    double n_e = 1.4;          // effective refractive index of the waveguides
    int num_waveguides = 4;    // N
    int pas_per_waveguide = 4; // M
    int rx_elements = 8;       // M_r, receive ULA size
    int num_users = 3;         // K
    double delta = 0.0;        // minimum PA spacing [m]; 0 = lambda_c/2 at finalize
    double length = 15.0;      // attachable waveguide length L [m]
    double offset = 5.0;       // BS-to-service-area offset D [m]
    double height = 1.0;       // waveguide height d_h [m]
    double area_x = 15.0;      // service-area extent D_x [m]
    double area_y = 15.0;      // service-area extent D_y [m]
    int slots = 256;           // coherent-interval length T
    double sigma0_sq = 1e-12;  // user noise power [W]
    double sigmas_sq = 1e-12;  // sensing receiver noise power [W]
    double power = 1.0;        // transmit power budget P [W]
    std::vector<double> gamma; // per-user SINR targets, linear; resized at finalize
    double beta_mag_coeff = 1.0;
    std::uint64_t rng_seed = 0;

    double lambda_c() const { return c / f_c; }
    double lambda_g() const { return lambda_c() / n_e; }
    double kappa_c() const { return 2.0 * M_PI / lambda_c(); }
    double kappa_g() const { return 2.0 * M_PI / lambda_g(); }

    // Fill derived defaults and check invariants. Throws ConfigError.
    void finalize() {
        if (delta <= 0.0)
            delta = 0.5 * lambda_c();
        if (gamma.empty())
            gamma.assign(static_cast<std::size_t>(num_users), db_to_linear(6.0));
        if (static_cast<int>(gamma.size()) == 1 && num_users > 1)
            gamma.assign(static_cast<std::size_t>(num_users), gamma[0]);
        validate();
    }

    void validate() const {
        auto req = [](bool ok, const char *what) {
            if (!ok)
                throw ConfigError(std::string("invalid config: ") + what);
        };
        req(f_c > 0.0, "f_c must be positive");
        req(c > 0.0, "c must be positive");
        req(n_e >= 1.0, "n_e must be >= 1");
        req(num_waveguides >= 1, "waveguide count must be >= 1");
        req(pas_per_waveguide >= 1, "PA count must be >= 1");
        req(rx_elements >= 1, "receive element count must be >= 1");
        req(num_users >= 0, "user count must be >= 0");
        req(delta > 0.0, "delta must be positive");
        req(length >= (pas_per_waveguide - 1) * delta, "waveguide too short for PA spacing");
        req(offset >= 0.0, "offset must be >= 0");
        req(height > 0.0, "height must be positive");
        req(area_x > 0.0 && area_y > 0.0, "service area must have positive extent");
        req(slots >= 1, "slot count must be >= 1");
        req(sigma0_sq > 0.0, "sigma0_sq must be positive");
        req(sigmas_sq > 0.0, "sigmas_sq must be positive");
        req(power > 0.0, "power budget must be positive");
        req(static_cast<int>(gamma.size()) == num_users, "gamma size must equal user count");
        for (double g : gamma)
            req(g > 0.0, "gamma entries must be positive");
    }
};

// One random draw of user/target placement plus the target reflection factor.
struct Scenario {
    std::vector<Position> users;
    Position target;
    cplx beta{0.0, 0.0};
};

// Distance from the BS origin (receive array) to the target, in the plane.
inline double target_range(const Scenario &sc) {
    return std::hypot(sc.target.x, sc.target.y);
}

// Draw scenario `index` of a config. Positions are uniform in the service
// rectangle; the target is re-drawn while it sits within 0.5 m of any user.
// |beta| = beta_mag_coeff / range, with a uniform random phase.
inline Scenario sample_scenario(const SystemConfig &cfg, std::uint64_t index) {
    Rng rng = Rng::stream(cfg.rng_seed, index);
    auto draw_point = [&]() {
        Position p;
        p.x = cfg.offset + rng.uniform() * cfg.area_x;
        p.y = (rng.uniform() - 0.5) * cfg.area_y;
        p.z = 0.0;
        return p;
    };
    Scenario sc;
    sc.users.reserve(static_cast<std::size_t>(cfg.num_users));
    for (int k = 0; k < cfg.num_users; ++k)
        sc.users.push_back(draw_point());
    sc.target = draw_point();
    bool clear = false;
    while (!clear) {
        clear = true;
        for (const auto &u : sc.users) {
            if (distance(u, sc.target) < 0.5) {
                sc.target = draw_point();
                clear = false;
                break;
            }
        }
    }
    const double range = target_range(sc);
    if (range < 1e-9)
        throw DegenerateGeometry("sampled target coincides with the BS origin");
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    sc.beta = (cfg.beta_mag_coeff / range) * cplx{std::cos(phase), std::sin(phase)};
    return sc;
}

} // namespace pass_isac

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
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pass_isac {

inline constexpr const char *version_string = "0.1.0";

using cplx = std::complex<double>;
inline constexpr cplx j_unit{0.0, 1.0};

// ---------------------------------------------------------------- errors --

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested antenna layout cannot satisfy the minimum-spacing constraints.
struct InfeasibleLayout : Error {
    using Error::Error;
};

// Target position makes angle or range quantities undefined.
struct DegenerateGeometry : Error {
    using Error::Error;
};

// Fisher information is singular; the geometry is unlocalizable.
struct SingularFim : Error {
    using Error::Error;
};

// SINR targets unattainable under the power budget.
struct Infeasible : Error {
    using Error::Error;
};

// Numerical breakdown inside the cone-program solver.
struct SolverFailure : Error {
    using Error::Error;
};

// A user receives essentially no power; rank-one recovery is undefined.
struct DegenerateBeam : Error {
    using Error::Error;
};

// Neighbouring antennas leave no room for the one being moved.
struct EmptyFeasibleInterval : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// ------------------------------------------------------------------- rng --
//
// Deterministic, stream-splittable generator. All randomness in the library
// flows through this wrapper so that results depend only on (seed, stream)
// and never on library-internal distribution implementations.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t &state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto &w : s_)
            w = detail::splitmix64(sm);
    }

    // Substream i of a root seed; independent of draw order elsewhere.
    static Rng stream(std::uint64_t root, std::uint64_t idx) {
        std::uint64_t sm = root ^ (0x632be59bd9b4e019ull * (idx + 1));
        return Rng(detail::splitmix64(sm));
    }

    std::uint64_t next_u64() { // xoshiro256**
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly-symmetric complex Gaussian, unit variance.
    cplx cnormal() { return {normal() * M_SQRT1_2, normal() * M_SQRT1_2}; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ------------------------------------------------------------- unit helpers --

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

} // namespace pass_isac

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

#include <chrono>
#include <limits>
#include <vector>

#include "pinching.hpp"

namespace pass_isac {

enum class SolveStatus { Converged, IterLimit, Infeasible };

inline const char *to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged:
        return "Converged";
    case SolveStatus::IterLimit:
        return "IterLimit";
    default:
        return "Infeasible";
    }
}

struct IterateRecord {
    double trace_crb = 0.0;
    double rcrb = 0.0;
    bool feasible = false;
    Eigen::VectorXd sinr;
    double power_used = 0.0;
    double wall_s = 0.0;
};

struct SolveReport {
    std::vector<IterateRecord> iterates;
    int best = -1; // index of the best feasible iterate, -1 when none
    SolveStatus status = SolveStatus::Converged;
    long sweep_violations = 0;
};

struct AoOptions {
    int max_outer = 20;
    double rel_tol = 1e-4;
    bool skip_pinching = false; // beamforming only, layout frozen
    double sdr_tol = 1e-7;
    PenaltyOptions penalty;
};

struct AoResult {
    PassLayout layout;
    BeamformingSolution beams;
    SolveReport report;
};

// Outer alternation: digital beamforming at the current layout, then
// penalty-method placement at the returned beamformers. A placement
// proposal is adopted only through its own refreshed beamforming solve
// (which restores exact QoS); proposals whose refreshed pair does not
// improve the bound are rolled back and the driver stops at the prior
// iterate, so the accepted sequence is non-increasing by construction.
inline AoResult ao_solve(const Scenario &sc, const SystemConfig &cfg,
                         const PassLayout &init_layout, const AoOptions &opts = {}) {
    validate_layout(init_layout, cfg);
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    AoResult res;
    res.layout = init_layout;
    res.report.status = SolveStatus::IterLimit;

    PassLayout layout = init_layout;
    double best_trace = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        ChannelSet ch = effective_channels(layout, sc, cfg);
        BeamformingSolution bs;
        try {
            const SdrProblem sp = build_sdr(ch, sc, cfg);
            const RawSdrSolution raw = solve_sdr(sp, opts.sdr_tol);
            bs = extract_rank_one(raw, ch, cfg);
        } catch (const Infeasible &) {
            if (outer == 0) {
                res.report.status = SolveStatus::Infeasible;
                return res;
            }
            res.report.status = SolveStatus::Converged; // revert to prior iterate
            return res;
        } catch (const SingularFim &) {
            if (outer == 0) {
                res.report.status = SolveStatus::Infeasible; // unlocalizable geometry
                return res;
            }
            res.report.status = SolveStatus::Converged;
            return res;
        } catch (const SolverFailure &) {
            if (outer == 0)
                throw;
            res.report.status = SolveStatus::Converged;
            return res;
        }

        const Eigen::MatrixXcd r_total =
            TransmitCovariance::from_beams(bs.w, bs.r_s).r;
        IterateRecord rec;
        rec.trace_crb = detail::trace_crb_or_inf(ch, r_total, sc.beta, cfg.slots,
                                                 cfg.sigmas_sq);
        rec.rcrb = std::sqrt(rec.trace_crb);
        rec.sinr = bs.report.sinr;
        rec.power_used = bs.report.power_used;
        rec.feasible = bs.report.ok;
        rec.wall_s = elapsed();
        res.report.iterates.push_back(rec);

        const bool improved = rec.feasible && rec.trace_crb < best_trace;
        const double prev_best = best_trace;
        if (improved) {
            best_trace = rec.trace_crb;
            res.layout = layout;
            res.beams = bs;
            res.report.best = static_cast<int>(res.report.iterates.size()) - 1;
            if (outer > 0 && prev_best - rec.trace_crb <=
                                 opts.rel_tol * std::max(rec.trace_crb, 1e-300)) {
                res.report.status = SolveStatus::Converged; // diminishing returns
                return res;
            }
        } else if (outer > 0) {
            // Refreshed pair at the proposed layout is no better: revert.
            res.report.status = SolveStatus::Converged;
            return res;
        }

        if (opts.skip_pinching) {
            res.report.status = SolveStatus::Converged;
            return res;
        }

        PenaltyState diag;
        const PassLayout moved =
            penalty_loop(layout, bs.w, bs.r_s, sc, cfg, opts.penalty, &diag);
        res.report.sweep_violations += diag.sweep_violations;
        if ((moved.x_pos - layout.x_pos).norm() < 1e-15) {
            res.report.status = SolveStatus::Converged;
            return res;
        }
        layout = moved;
    }
    return res; // IterLimit
}

} // namespace pass_isac

// SPDX-License-Identifier: Apache-2.0
//
// starris: joint active/passive beamforming for STAR-RIS aided downlink systems
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

// Time switching: per-user effective-gain maximization over unit-modulus surface vectors
// (semidefinite relaxation with Gaussian randomization), MRT beamforming and a 1-D convex
// time/power split.

#include "starris/core_model.hpp"

#include <cstdint>

namespace starris
{

struct TsOptions
{
    int randomizations = 1000;
    std::uint64_t seed = 1;
    double lambda_margin = 1e-4; // search interval [margin, 1 - margin]
    double solver_tolerance = 1e-9;
    int refinement_sweeps = 50; // element-wise phase ascent after randomization, 0 disables

    void validate() const;
};

struct PhaseResult
{
    CVec q;                     // unit modulus
    double gain = 0.0;          // ||H^H q||^2
    double relaxation_bound = 0.0; // SDR optimum, an upper bound on the gain
    double eigen_candidate_gain = 0.0;
};

PhaseResult optimize_phase_vector(const CMat &H, const TsOptions &options = {});

// sqrt(p) H^H q / ||H^H q||.
CVec mrt_beamformer(const CVec &q, const CMat &H, double power);

struct TimePowerAllocation
{
    double lambda_t = 0.5, lambda_r = 0.5;
    double p_t = 0.0, p_r = 0.0;

    double total() const { return p_t + p_r; }
};

// Minimum power to reach rate R in a fraction lambda of the time with gain g.
double ts_power(double lambda, double rate, double sigma2, double gain);

TimePowerAllocation allocate_time_power(double g_t, double g_r, double rate_t, double rate_r, double sigma2_t,
                                        double sigma2_r, double margin = 1e-4);

struct TsResult
{
    BeamformingSolution solution;
    SolverReport report;
    std::array<PhaseResult, 2> phases;
    TimePowerAllocation allocation;
};

TsResult solve_ts(const ProblemSpec &spec, const ChannelSet &channels, const TsOptions &options = {});

} // namespace starris

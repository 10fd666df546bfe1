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

// Brute-force reference optimizer for tiny instances and an independent rate evaluator.

#include "starris/core_model.hpp"

#include <array>

namespace starris::oracle
{

struct Grid
{
    int phase_levels = 32;     // uniform phases k 2pi / P
    int amplitude_levels = 11; // transmit fractions c i / (A - 1)
    int lambda_points = 20001; // TS time-split scan
};

// Minimum total power over the discretized surface coefficients of spec.protocol, with
// exact minimum-power beamforming for each grid point. Needs N <= 2 and M <= 3.
// Throws InfeasibleProblem when no grid point meets the targets.
double brute_force_min_power(const ProblemSpec &spec, const ChannelSet &channels, const Grid &grid = {});

struct TimeSplit
{
    double lambda_t = 0.5;
    double total = 0.0;
};

// Dense scan of lambda -> p_t(lambda) + p_r(1 - lambda), refined by ternary search around the best sample.
TimeSplit lambda_scan(double g_t, double g_r, double rate_t, double rate_r, double sigma2_t, double sigma2_r,
                      int points = 20001);

// Minimum downlink power serving effective channels e_t, e_r (N-vectors) at SINR gamma_t, gamma_r;
// infinity when the pair is not jointly achievable.
double min_unicast_power(const CVec &e_t, const CVec &e_r, double gamma_t, double gamma_r, double sigma2_t,
                         double sigma2_r);
// Minimum power of one shared beamformer giving SNR gamma_k over e_k to both users.
double min_multicast_power(const CVec &e_t, const CVec &e_r, double gamma_t, double gamma_r, double sigma2_t,
                           double sigma2_r);

// Per-user rates recomputed with explicit sums over elements and antennas.
std::array<double, 2> rate_check(const BeamformingSolution &solution, const ChannelSet &channels,
                                 const ProblemSpec &spec);

} // namespace starris::oracle

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

// Penalty-based two-loop algorithm for the ES and MS protocols (and the UES / conventional
// RIS baselines, which are constrained special cases of ES). The inner loop solves convex
// SDP majorizations of the penalized problem; the outer loop increases the penalty factors
// until the lifted surface matrices are rank one (and, for MS, the amplitudes are binary).

#include "starris/conic.hpp"
#include "starris/core_model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace starris
{

struct PenaltyOptions
{
    double eta0 = 1e-4;
    double chi0 = 1e-4;
    double omega = 10.0; // eta scaling per outer iteration
    double varpi = 10.0; // chi scaling per outer iteration
    double epsilon_inner = 1e-2;
    double epsilon_violation = 1e-7;
    int n_max = 30;
    int outer_max = 20;
    double eta_cap = 1e8;
    double chi_cap = 1e8;
    double solver_tolerance = 1e-9;
    double rank_tolerance = 1e-6;
    std::uint64_t seed = 1; // random initial phases / mode assignment
    bool ms_polish = true;
    int init_attempts = 50;
    int starts = 3; // independent runs: channel-aligned start, then random starts; best kept

    void validate() const;
};

// How the per-element amplitudes are constrained inside the subproblem.
enum class AmplitudeMode
{
    Free,    // ES: beta^t + beta^r = c
    Binary,  // MS: as Free, with the binary penalty in the objective
    Uniform, // UES: additionally beta_m^t = beta_1^t
    Fixed    // conventional RIS / MS polish: each element serves exactly one user
};

struct SurfaceLayout
{
    AmplitudeMode mode = AmplitudeMode::Free;
    std::array<std::vector<int>, 2> support; // elements whose lifted entries are variables, per user
};

// Default layout implied by spec.protocol (conventional RIS: first half transmits, second half reflects).
SurfaceLayout default_layout(const ProblemSpec &spec);

struct RelaxedSubproblem
{
    conic::ConicProgram program;
    std::array<conic::HermitianVar, 2> Q;
    std::array<conic::HermitianVar, 2> W; // multicast: both entries refer to the shared W_c
    int num_beamformer_variables = 0;
    int num_omega_terms = 0;
    double power_scale = 1.0; // W variables are in units of this many watts
};

// Convex subproblem at the given anchors (anchor W in watts; multicast keeps W_c in W_t).
// power_scale <= 0 uses the anchor's total power.
RelaxedSubproblem build_relaxed_subproblem(const ProblemSpec &spec, const ChannelSet &channels,
                                           const LiftedState &anchors, double eta, double chi,
                                           double power_scale = 0.0);
RelaxedSubproblem build_relaxed_subproblem(const ProblemSpec &spec, const ChannelSet &channels,
                                           const SurfaceLayout &layout, const LiftedState &anchors, double eta,
                                           double chi, double power_scale);

// Max over users of the rank penalty of Q_k, and for MS of beta - beta^2.
double penalty_violation(const LiftedState &state, AmplitudeMode mode);

struct PenaltyResult
{
    BeamformingSolution solution;
    SolverReport report;
    LiftedState lifted; // final lifted iterate (W in watts)
};

PenaltyResult solve_penalty(const ProblemSpec &spec, const ChannelSet &channels, const PenaltyOptions &options,
                            const std::optional<LiftedState> &initial_state = std::nullopt);

// Feasible starting point: random phases, beta = 1/2 (ES/UES), random binary split (MS) or
// the fixed pattern, beamformers from MRT/ZF directions with balanced powers times margin.
// The cheapest of the first 8 feasible draws is returned; nullopt when no attempt is feasible.
std::optional<LiftedState> initial_point(const ProblemSpec &spec, const ChannelSet &channels,
                                         const SurfaceLayout &layout, std::uint64_t seed, int attempts,
                                         double margin = 1.05);

// Deterministic start: per-user phases from the dominant eigenvector of H_k H_k^H on the
// user's elements (MS assigns each element to the user with the stronger cascade row), then
// coordinate descent over grid phases and amplitude splits on the MRT/ZF balanced power.
std::optional<LiftedState> aligned_point(const ProblemSpec &spec, const ChannelSet &channels,
                                         const SurfaceLayout &layout, double margin = 1.05);

// Minimum powers for fixed surface vectors and beamformer directions (both QoS met with
// equality); nullopt when the pair of targets cannot be met along these directions.
std::optional<std::array<double, 2>> balance_powers(const ProblemSpec &spec, const std::array<CMat, 2> &H,
                                                    const std::array<CVec, 2> &q,
                                                    const std::array<CVec, 2> &directions);

} // namespace starris

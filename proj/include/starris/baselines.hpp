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

// Baseline schemes and a single entry point that dispatches on the protocol.

#include "starris/core_model.hpp"
#include "starris/penalty_solver.hpp"
#include "starris/ts_solver.hpp"

namespace starris
{

struct SchemeOptions
{
    PenaltyOptions penalty;
    TsOptions ts;
};

struct SchemeResult
{
    BeamformingSolution solution;
    SolverReport report;
};

// One transmit-only and one reflect-only surface of M/2 elements each (M even).
SchemeResult solve_conventional_ris(const ProblemSpec &spec, const ChannelSet &channels,
                                    const PenaltyOptions &options = {});

// Energy splitting with the same transmit amplitude on every element.
SchemeResult solve_ues(const ProblemSpec &spec, const ChannelSet &channels, const PenaltyOptions &options = {});

SchemeResult solve_scheme(const ProblemSpec &spec, const ChannelSet &channels, const SchemeOptions &options = {});

} // namespace starris

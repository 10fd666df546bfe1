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

#include "starris/baselines.hpp"

namespace starris
{

SchemeResult solve_conventional_ris(const ProblemSpec &spec, const ChannelSet &channels,
                                    const PenaltyOptions &options)
{
    if (spec.elements % 2 != 0)
        throw ContractViolation("conventional RIS baseline needs an even number of elements");
    ProblemSpec s = spec;
    s.protocol = Protocol::ConvRis;
    auto r = solve_penalty(s, channels, options);
    return {std::move(r.solution), std::move(r.report)};
}

SchemeResult solve_ues(const ProblemSpec &spec, const ChannelSet &channels, const PenaltyOptions &options)
{
    ProblemSpec s = spec;
    s.protocol = Protocol::UES;
    auto r = solve_penalty(s, channels, options);
    return {std::move(r.solution), std::move(r.report)};
}

SchemeResult solve_scheme(const ProblemSpec &spec, const ChannelSet &channels, const SchemeOptions &options)
{
    switch (spec.protocol)
    {
    case Protocol::TS:
    {
        auto r = solve_ts(spec, channels, options.ts);
        return {std::move(r.solution), std::move(r.report)};
    }
    case Protocol::ConvRis:
        return solve_conventional_ris(spec, channels, options.penalty);
    case Protocol::UES:
        return solve_ues(spec, channels, options.penalty);
    case Protocol::ES:
    case Protocol::MS:
        break;
    }
    auto r = solve_penalty(spec, channels, options.penalty);
    return {std::move(r.solution), std::move(r.report)};
}

} // namespace starris

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
#include "starris/channel_gen.hpp"

#include <doctest.h>

#include <random>

using namespace starris;

namespace
{

ChannelSet channels_for(const ProblemSpec &spec, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return generate_channels(spec, GeometryConfig{}, FadingConfig{}, rng);
}

} // namespace

TEST_CASE("conventional RIS emits the fixed block pattern")
{
    const auto spec = make_problem(2, 6, Protocol::ConvRis, Scenario::Unicast, 0.0);
    const auto ch = channels_for(spec, 1);
    const auto r = solve_conventional_ris(spec, ch);
    REQUIRE(r.report.status == SolverStatus::Converged);
    for (int m = 0; m < 6; ++m)
    {
        CHECK(r.solution.coefficients.beta_t[m] == (m < 3 ? 1.0 : 0.0));
        CHECK(r.solution.coefficients.beta_r[m] == (m < 3 ? 0.0 : 1.0));
    }
    for (int k = 0; k < 2; ++k)
        CHECK(r.solution.achieved_rates[k] >= spec.rate_targets[k] - 1e-4);
}

TEST_CASE("conventional RIS needs an even number of elements")
{
    const auto spec = make_problem(2, 5, Protocol::ConvRis, Scenario::Unicast, 0.0);
    CHECK_THROWS_AS(solve_conventional_ris(spec, channels_for(spec, 1)), ContractViolation);
}

TEST_CASE("UES uses one amplitude split on every element")
{
    for (Scenario s : {Scenario::Unicast, Scenario::Multicast})
    {
        const auto spec = make_problem(2, 6, Protocol::UES, s, s == Scenario::Unicast ? 0.0 : 10.0);
        const auto ch = channels_for(spec, 2);
        const auto r = solve_ues(spec, ch);
        REQUIRE(r.report.status == SolverStatus::Converged);
        const RVec &b = r.solution.coefficients.beta_t;
        CHECK((b.array() - b.mean()).square().mean() <= 1e-20);
        for (int k = 0; k < 2; ++k)
            CHECK(r.solution.achieved_rates[k] >= spec.rate_targets[k] - 1e-4);
    }
}

TEST_CASE("dispatch follows the protocol")
{
    for (Protocol p : {Protocol::ES, Protocol::MS, Protocol::TS, Protocol::ConvRis, Protocol::UES})
    {
        const auto spec = make_problem(2, 4, p, Scenario::Unicast, 0.0);
        const auto r = solve_scheme(spec, channels_for(spec, 3));
        CHECK(r.solution.protocol == p);
        CHECK(validate_coefficients(p, r.solution.coefficients, 1e-8).ok());
    }
}

TEST_CASE("UES is not better than ES on average")
{
    double es = 0.0, ues = 0.0;
    for (std::uint64_t seed = 10; seed < 14; ++seed)
    {
        auto spec = make_problem(2, 4, Protocol::ES, Scenario::Unicast, 0.0);
        const auto ch = channels_for(spec, seed);
        es += solve_scheme(spec, ch).solution.total_power;
        spec.protocol = Protocol::UES;
        ues += solve_scheme(spec, ch).solution.total_power;
    }
    CHECK(ues >= es * 0.98);
}

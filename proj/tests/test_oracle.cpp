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
#include "starris/linalg.hpp"
#include "starris/oracle.hpp"
#include "starris/ts_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace starris;

namespace
{

ChannelSet channels_for(const ProblemSpec &spec, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return generate_channels(spec, GeometryConfig{}, FadingConfig{}, rng);
}

double db_gap(double a, double b)
{
    return 10.0 * std::log10(a / b);
}

} // namespace

TEST_CASE("single-element TS matches the analytic lambda scan")
{
    auto spec = make_problem(1, 1, Protocol::TS, Scenario::Unicast, 0.0);
    const auto ch = channels_for(spec, 1);
    const double gt = std::norm(ch.v_t[0] * ch.G(0, 0));
    const double gr = std::norm(ch.v_r[0] * ch.G(0, 0));
    const double sigma = spec.noise_powers[0];
    const double R = spec.rate_targets[0];
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 20000; ++i)
    {
        const double l = i / 20000.0;
        best = std::min(best, l * sigma * std::expm1(R * std::log(2.0) / l) / gt +
                                  (1 - l) * sigma * std::expm1(R * std::log(2.0) / (1 - l)) / gr);
    }
    const double o = oracle::brute_force_min_power(spec, ch);
    CHECK(o <= best * (1.0 + 1e-12));
    CHECK(o >= best * (1.0 - 1e-6));
}

TEST_CASE("orthogonal effective channels give the interference-free powers")
{
    const CVec et = (CVec(2) << cd(1.0, 0.0), 0.0).finished();
    const CVec er = (CVec(2) << 0.0, cd(0.0, 2.0)).finished();
    const double p = oracle::min_unicast_power(et, er, 3.0, 1.0, 0.5, 0.2);
    CHECK(p == doctest::Approx(3.0 * 0.5 / 1.0 + 1.0 * 0.2 / 4.0).epsilon(1e-9));
}

TEST_CASE("single-antenna unicast power solves the 2x2 balancing system")
{
    const CVec et = CVec::Constant(1, cd(1.2, 0.3));
    const CVec er = CVec::Constant(1, cd(-0.4, 0.9));
    const double gt = 0.5, gr = 0.8, st = 1.0, sr = 2.0;
    const double at = et.squaredNorm(), ar = er.squaredNorm();
    // pt at = gt (pr at + st), pr ar = gr (pt ar + sr)
    const double det = 1.0 - gt * gr;
    const double pt = (gt * st / at + gt * gr * sr / ar) / det;
    const double pr = (gr * sr / ar + gr * gt * st / at) / det;
    CHECK(oracle::min_unicast_power(et, er, gt, gr, st, sr) == doctest::Approx(pt + pr).epsilon(1e-9));
    CHECK(std::isinf(oracle::min_unicast_power(et, er, 1.0, 1.5, st, sr)));
}

TEST_CASE("multicast power is the larger single-user requirement when the channels align")
{
    const CVec e = (CVec(2) << cd(1.0, 0.5), cd(-0.3, 0.2)).finished();
    const double p = oracle::min_multicast_power(e, 2.0 * e, 1.0, 1.0, 1.0, 1.0);
    CHECK(p == doctest::Approx(1.0 / e.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("refining the grid never increases the oracle power")
{
    for (Protocol p : {Protocol::ES, Protocol::MS, Protocol::UES})
        for (std::uint64_t seed : {1, 2})
        {
            auto spec = make_problem(1, 2, p, Scenario::Unicast, 0.0);
            spec.rate_targets = {0.5, 0.5};
            const auto ch = channels_for(spec, seed);
            const double coarse = oracle::brute_force_min_power(spec, ch, {16, 11, 2001});
            const double fine = oracle::brute_force_min_power(spec, ch, {32, 21, 2001});
            CHECK(fine <= coarse * (1.0 + 1e-12));
            CHECK(oracle::brute_force_min_power(spec, ch, {16, 11, 2001}) == coarse);
        }
}

TEST_CASE("oracle guards its enumeration bounds")
{
    const auto big = make_problem(1, 4, Protocol::ES, Scenario::Unicast, 0.0);
    CHECK_THROWS_AS(oracle::brute_force_min_power(big, channels_for(big, 1)), ContractViolation);
    const auto small = make_problem(1, 2, Protocol::ES, Scenario::Unicast, 0.0);
    CHECK_THROWS_AS(oracle::brute_force_min_power(small, channels_for(small, 1), {128, 11, 2001}),
                    ContractViolation);
}

TEST_CASE("rate check agrees with the model on emitted solutions")
{
    for (Protocol p : {Protocol::ES, Protocol::MS, Protocol::TS, Protocol::UES, Protocol::ConvRis})
        for (Scenario s : {Scenario::Unicast, Scenario::Multicast})
        {
            const auto spec = make_problem(2, 4, p, s, 3.0);
            const auto ch = channels_for(spec, 9);
            const auto r = solve_scheme(spec, ch);
            const auto check = oracle::rate_check(r.solution, ch, spec);
            for (int k = 0; k < 2; ++k)
                CHECK(std::abs(check[k] - r.solution.achieved_rates[k]) <= 1e-10);
        }
}

TEST_CASE("rate check edge cases")
{
    const auto spec = make_problem(2, 3, Protocol::TS, Scenario::Unicast, 0.0);
    const auto ch = channels_for(spec, 3);
    BeamformingSolution sol;
    sol.protocol = Protocol::TS;
    sol.w_t = CVec::Zero(2);
    sol.w_r = CVec::Zero(2);
    sol.coefficients.beta_t = sol.coefficients.beta_r = RVec::Ones(3);
    sol.coefficients.theta_t = sol.coefficients.theta_r = RVec::Zero(3);
    auto zero = oracle::rate_check(sol, ch, spec);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    // lambda = 1 is the interference-free single-user rate
    std::mt19937_64 rng(4);
    sol.w_t = linalg::crandn(2, rng);
    sol.coefficients.lambda_t = 1.0;
    const CVec q = sol.coefficients.coefficient_vector(T);
    const CMat H = cascade_channel(ch.v_t, ch.G);
    const double snr = std::norm(q.dot(H * sol.w_t)) / spec.noise_powers[0];
    CHECK(oracle::rate_check(sol, ch, spec)[0] == doctest::Approx(std::log2(1.0 + snr)).epsilon(1e-12));
}

TEST_CASE("solvers are within half a dB of the oracle on tiny instances")
{
    for (Protocol p : {Protocol::ES, Protocol::MS, Protocol::TS, Protocol::ConvRis})
        for (std::uint64_t seed : {1000, 1003})
        {
            auto spec = make_problem(1, 2, p, Scenario::Unicast, 0.0);
            spec.rate_targets = {0.5, 0.5};
            const auto ch = channels_for(spec, seed);
            const double o = oracle::brute_force_min_power(spec, ch);
            const auto r = solve_scheme(spec, ch);
            CAPTURE(to_string(p));
            CHECK(db_gap(r.solution.total_power, o) <= 0.5);
            for (int k = 0; k < 2; ++k)
                CHECK(r.solution.achieved_rates[k] >= spec.rate_targets[k] - 1e-6);
        }
}

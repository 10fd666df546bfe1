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

#include "starris/channel_gen.hpp"
#include "starris/linalg.hpp"
#include "starris/oracle.hpp"
#include "starris/ts_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace starris;

namespace
{

ChannelSet channels_for(const ProblemSpec &spec, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return generate_channels(spec, GeometryConfig{}, FadingConfig{}, rng);
}

double gain_of(const CMat &H, const CVec &q)
{
    return (H.adjoint() * q).squaredNorm();
}

} // namespace

TEST_CASE("options are validated")
{
    TsOptions o;
    CHECK_NOTHROW(o.validate());
    o.randomizations = -1;
    CHECK_THROWS_AS(o.validate(), ContractViolation);
    o = TsOptions{};
    o.lambda_margin = 0.5;
    CHECK_THROWS_AS(o.validate(), ContractViolation);
}

TEST_CASE("single element: any unit scalar, gain is the row energy")
{
    std::mt19937_64 rng(1);
    const CMat H = linalg::crandn(1, 3, rng);
    const auto r = optimize_phase_vector(H);
    CHECK(std::abs(std::abs(r.q[0]) - 1.0) <= 1e-12);
    CHECK(r.gain == doctest::Approx(H.row(0).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("single antenna: coherent combining is recovered")
{
    std::mt19937_64 rng(2);
    for (int M : {2, 5, 8})
    {
        const CMat h = linalg::crandn(M, 1, rng);
        const auto r = optimize_phase_vector(h);
        const double expect = std::pow(h.cwiseAbs().sum(), 2);
        CHECK(r.gain == doctest::Approx(expect).epsilon(1e-6));
        for (int m = 0; m < M; ++m)
            CHECK(std::abs(std::abs(r.q[m]) - 1.0) <= 1e-9);
    }
}

TEST_CASE("M=4, N=2 gain is within 5% of a 16-level exhaustive search")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial)
    {
        const CMat H = linalg::crandn(4, 2, rng);
        double best = 0.0;
        CVec q(4);
        q[0] = 1.0;
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b)
                for (int c = 0; c < 16; ++c)
                {
                    q[1] = std::polar(1.0, 2.0 * std::numbers::pi * a / 16.0);
                    q[2] = std::polar(1.0, 2.0 * std::numbers::pi * b / 16.0);
                    q[3] = std::polar(1.0, 2.0 * std::numbers::pi * c / 16.0);
                    best = std::max(best, gain_of(H, q));
                }
        const auto r = optimize_phase_vector(H);
        CHECK(r.gain >= 0.95 * best);
        CHECK(r.gain == doctest::Approx(gain_of(H, r.q)).epsilon(1e-12));
        CHECK(r.gain <= r.relaxation_bound * (1.0 + 1e-6));
        CHECK(r.gain >= r.eigen_candidate_gain * (1.0 - 1e-12));
    }
}

TEST_CASE("MRT beamformer")
{
    std::mt19937_64 rng(4);
    const CMat H = linalg::crandn(5, 3, rng);
    const CVec q = optimize_phase_vector(H).q;
    CHECK(mrt_beamformer(q, H, 0.0).norm() == 0.0);
    const double p = 0.37;
    const CVec w = mrt_beamformer(q, H, p);
    CHECK(w.squaredNorm() == doctest::Approx(p).epsilon(1e-12));
    const double g = (H.adjoint() * q).squaredNorm();
    CHECK(std::norm(q.dot(H * w)) == doctest::Approx(p * g).epsilon(1e-10));
    CHECK_THROWS_AS(mrt_beamformer(q, CMat::Zero(5, 3), 1.0), InfeasibleProblem);

    // single antenna: a scaled phase rotation
    const CMat h = linalg::crandn(5, 1, rng);
    const CVec w1 = mrt_beamformer(q, h, p);
    CHECK(std::norm(w1[0]) == doctest::Approx(p).epsilon(1e-12));
    CHECK(std::norm(q.dot(h * w1)) == doctest::Approx(p * std::norm(q.dot(h.col(0)))).epsilon(1e-10));
}

TEST_CASE("time/power allocation examples")
{
    const auto sym = allocate_time_power(2.0, 2.0, 1.5, 1.5, 0.3, 0.3);
    CHECK(sym.lambda_t == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sym.lambda_t + sym.lambda_r == doctest::Approx(1.0).epsilon(1e-15));

    const auto single = allocate_time_power(2.0, 3.0, 1.0, 0.0, 0.5, 0.5);
    CHECK(single.lambda_t == 1.0);
    CHECK(single.p_r == 0.0);
    CHECK(single.p_t == doctest::Approx(0.5 * (2.0 - 1.0) / 2.0).epsilon(1e-12));

    const auto unit = allocate_time_power(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    CHECK(ts_power(0.5, 1.0, 1.0, 1.0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(unit.total() <= 3.0 + 1e-8);
    const auto scan = oracle::lambda_scan(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    CHECK(scan.lambda_t == doctest::Approx(0.5).epsilon(1e-6));

    CHECK_THROWS_AS(allocate_time_power(0.0, 1.0, 1.0, 1.0, 1.0, 1.0), InfeasibleProblem);
    CHECK_NOTHROW(allocate_time_power(0.0, 1.0, 0.0, 1.0, 1.0, 1.0));
}

TEST_CASE("allocation matches the dense lambda scan")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < 50; ++i)
    {
        const double gt = u(rng), gr = u(rng), rt = u(rng), rr = u(rng);
        const auto a = allocate_time_power(gt, gr, rt, rr, 1.0, 1.0);
        const auto s = oracle::lambda_scan(gt, gr, rt, rr, 1.0, 1.0);
        CHECK(a.total() <= s.total * (1.0 + 1e-6));
        CHECK(a.total() >= s.total * (1.0 - 1e-6));
        CHECK(a.p_t == doctest::Approx(ts_power(a.lambda_t, rt, 1.0, gt)).epsilon(1e-12));
    }
}

TEST_CASE("per-user power is convex in the time share")
{
    for (double rate : {0.5, 1.0, 3.0})
        for (double g : {0.2, 1.0, 5.0})
        {
            const double h = 1e-3;
            for (double lambda = 0.01; lambda + h < 1.0; lambda += 0.01)
            {
                const double d2 = ts_power(lambda + h, rate, 1.0, g) - 2.0 * ts_power(lambda, rate, 1.0, g) +
                                  ts_power(lambda - h, rate, 1.0, g);
                CHECK(d2 >= -1e-8);
            }
        }
}

TEST_CASE("more gain never costs more power")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < 50; ++i)
    {
        const double gt = u(rng), gr = u(rng), rt = u(rng), rr = u(rng);
        const double base = allocate_time_power(gt, gr, rt, rr, 1.0, 1.0).total();
        CHECK(allocate_time_power(1.5 * gt, gr, rt, rr, 1.0, 1.0).total() <= base * (1.0 + 1e-9));
        CHECK(allocate_time_power(gt, 1.5 * gr, rt, rr, 1.0, 1.0).total() <= base * (1.0 + 1e-9));
    }
}

TEST_CASE("solve_ts: unit modulus, QoS met, unicast equals multicast")
{
    for (std::uint64_t seed : {1, 2, 3})
    {
        auto spec = make_problem(2, 6, Protocol::TS, Scenario::Unicast, 3.0);
        const auto ch = channels_for(spec, seed);
        const auto uni = solve_ts(spec, ch);
        REQUIRE(uni.report.status == SolverStatus::Converged);
        for (int k = 0; k < 2; ++k)
        {
            CHECK(uni.solution.achieved_rates[k] >= spec.rate_targets[k] - 1e-6);
            const CVec q = uni.solution.coefficients.coefficient_vector(static_cast<User>(k));
            CHECK((q.cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-9);
        }
        const auto &c = uni.solution.coefficients;
        CHECK(c.lambda_t + c.lambda_r == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(uni.solution.total_power == doctest::Approx(uni.allocation.total()).epsilon(1e-12));

        spec.scenario = Scenario::Multicast;
        const auto mc = solve_ts(spec, ch);
        CHECK(mc.solution.total_power == uni.solution.total_power);
    }
}

TEST_CASE("solve_ts reports a user without a channel as infeasible")
{
    const auto spec = make_problem(2, 4, Protocol::TS, Scenario::Unicast, 0.0);
    auto ch = channels_for(spec, 7);
    ch.v_r.setZero();
    CHECK(solve_ts(spec, ch).report.status == SolverStatus::Infeasible);
}

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

#include "starris/core_model.hpp"
#include "starris/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace starris;

TEST_CASE("cascade channel weights rows by the conjugated surface channel")
{
    std::mt19937_64 rng(1);
    const CMat G = linalg::crandn(3, 2, rng);
    CHECK((cascade_channel(CVec::Ones(3), G) - G).norm() < 1e-15);

    CVec e1 = CVec::Zero(3);
    e1[0] = 1.0;
    const CMat H = cascade_channel(e1, G);
    CHECK((H.row(0) - G.row(0)).norm() < 1e-15);
    CHECK(H.bottomRows(2).norm() == 0.0);

    const CVec v = linalg::crandn(3, rng);
    const CMat Hv = cascade_channel(v, G);
    for (int trial = 0; trial < 100; ++trial)
    {
        const CVec q = linalg::crandn(3, rng);
        const CVec w = linalg::crandn(2, rng);
        const CMat Theta = q.asDiagonal().toDenseMatrix().adjoint();
        const cd lhs = q.dot(Hv * w); // q^H H w
        const cd rhs = v.dot(Theta * G * w);
        CHECK(std::abs(std::abs(lhs) - std::abs(rhs)) < 1e-12);
    }
    CHECK_THROWS_AS(cascade_channel(CVec::Ones(2), G), ContractViolation);
}

TEST_CASE("unicast rate")
{
    CMat H(1, 1);
    H(0, 0) = 2.0;
    CVec q(1), w(1), z = CVec::Zero(1);
    q[0] = 1.0;
    w[0] = 0.5;
    CHECK(unicast_rate(H, q, w, z, 1.0) == doctest::Approx(1.0));
    CHECK(unicast_rate(H, q, z, w, 1.0) == 0.0);
    CHECK_THROWS_AS(unicast_rate(H, q, w, z, 0.0), std::domain_error);

    // scalar re-evaluation, M = 2, N = 1
    std::mt19937_64 rng(4);
    const CMat G = linalg::crandn(2, 1, rng);
    const CVec v = linalg::crandn(2, rng);
    const CMat Hk = cascade_channel(v, G);
    CVec qk(2), wk(1), wo(1);
    qk << std::polar(0.8, 0.3), std::polar(0.6, -1.1);
    wk[0] = cd(0.4, -0.2);
    wo[0] = cd(-0.1, 0.3);
    const double sigma2 = 0.05;
    cd sig(0.0), itf(0.0);
    for (int m = 0; m < 2; ++m)
    {
        const cd coef = std::conj(qk[m]) * std::conj(v[m]) * G(m, 0);
        sig += coef * wk[0];
        itf += coef * wo[0];
    }
    const double expect = std::log2(1.0 + std::norm(sig) / (std::norm(itf) + sigma2));
    CHECK(std::abs(unicast_rate(Hk, qk, wk, wo, sigma2) - expect) < 1e-12);
}

TEST_CASE("unicast rate is nondecreasing in the own beamformer norm")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial)
    {
        const CMat H = linalg::crandn(4, 2, rng);
        const CVec q = linalg::crandn(4, rng);
        const CVec w = linalg::crandn(2, rng);
        const CVec wo = linalg::crandn(2, rng);
        double prev = -1.0;
        for (double s = 0.0; s <= 3.0; s += 0.25)
        {
            const double r = unicast_rate(H, q, s * w, wo, 0.1);
            CHECK(r >= prev - 1e-15);
            prev = r;
        }
    }
}

TEST_CASE("time-switching rate")
{
    CMat H(1, 1);
    H(0, 0) = 1.0;
    CVec q(1), w(1);
    q[0] = 1.0;
    w[0] = 1.0;
    CHECK(ts_rate(H, q, w, 1.0, 0.5) == doctest::Approx(0.5 * std::log2(3.0)).epsilon(1e-12));
    CHECK(ts_rate(H, q, w, 1.0, 0.0) == 0.0);

    std::mt19937_64 rng(2);
    const CMat Hr = linalg::crandn(3, 2, rng);
    CVec qr(3);
    for (int m = 0; m < 3; ++m)
        qr[m] = std::polar(1.0, 0.7 * m);
    const CVec wr = linalg::crandn(2, rng);
    CHECK(std::abs(ts_rate(Hr, qr, wr, 0.3, 1.0) - unicast_rate(Hr, qr, wr, CVec::Zero(2), 0.3)) < 1e-12);
    CHECK(ts_rate(Hr, qr, 2.0 * wr, 0.3, 0.4) > ts_rate(Hr, qr, wr, 0.3, 0.4));
}

TEST_CASE("multicast rate is the smaller per-user rate")
{
    std::mt19937_64 rng(6);
    const CMat G = linalg::crandn(2, 2, rng);
    const CMat Ht = cascade_channel(linalg::crandn(2, rng), G);
    const CMat Hr = cascade_channel(linalg::crandn(2, rng), G);
    const CVec qt = linalg::crandn(2, rng).normalized();
    const CVec qr = linalg::crandn(2, rng).normalized();
    const CVec w = linalg::crandn(2, rng);
    const double rt = unicast_rate(Ht, qt, w, CVec::Zero(2), 0.2);
    const double rr = unicast_rate(Hr, qr, w, CVec::Zero(2), 0.3);
    const double rc = multicast_rate(Ht, Hr, qt, qr, w, 0.2, 0.3);
    CHECK(rc == doctest::Approx(std::min(rt, rr)).epsilon(1e-14));
    CHECK(multicast_rate(Ht, Hr, qt, CVec::Zero(2), w, 0.2, 0.3) == 0.0);
    CHECK(multicast_rate(Ht, Ht, qt, qt, w, 0.2, 0.2) == doctest::Approx(rt).epsilon(1e-14));
}

TEST_CASE("coefficient validation per protocol")
{
    StarCoefficients c;
    c.beta_t = RVec::Constant(4, 0.5);
    c.beta_r = RVec::Constant(4, 0.5);
    c.theta_t = RVec::Zero(4);
    c.theta_r = RVec::Zero(4);
    CHECK(validate_coefficients(Protocol::ES, c, 1e-9).ok());
    CHECK(validate_coefficients(Protocol::UES, c, 1e-9).ok());

    const auto ms = validate_coefficients(Protocol::MS, c, 1e-9);
    CHECK_FALSE(ms.ok());
    CHECK(ms.max_violation(ViolationKind::NonBinary) == doctest::Approx(0.25));

    StarCoefficients ts = c;
    ts.beta_t.setOnes();
    ts.beta_r.setOnes();
    ts.lambda_t = 0.6;
    ts.lambda_r = 0.5;
    const auto tr = validate_coefficients(Protocol::TS, ts, 1e-9);
    CHECK(tr.max_violation(ViolationKind::TimeSimplex) == doctest::Approx(0.1));

    StarCoefficients bad = c;
    bad.beta_t[2] = 0.7;
    CHECK(validate_coefficients(Protocol::ES, bad, 1e-9).max_violation(ViolationKind::EnergySum) ==
          doctest::Approx(0.2));
    CHECK(validate_coefficients(Protocol::UES, bad, 1e-9).count(ViolationKind::NotUniform) >= 1);
}

TEST_CASE("coefficient vector round trip")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StarCoefficients c;
    c.beta_t.resize(5);
    c.beta_r.resize(5);
    c.theta_t.resize(5);
    c.theta_r.resize(5);
    for (int m = 0; m < 5; ++m)
    {
        c.beta_t[m] = u(rng);
        c.beta_r[m] = 1.0 - c.beta_t[m];
        c.theta_t[m] = 6.28 * u(rng);
        c.theta_r[m] = 6.28 * u(rng);
    }
    RVec beta, theta;
    StarCoefficients::from_vector(c.coefficient_vector(T), beta, theta);
    CHECK((beta - c.beta_t).norm() < 1e-12);
    CHECK((theta - c.theta_t).norm() < 1e-12);
}

TEST_CASE("problem spec contracts")
{
    auto spec = make_problem(2, 10, Protocol::ES, Scenario::Unicast, 0.0);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.sinr_target(T) == doctest::Approx(1.0));
    spec.protocol = Protocol::ConvRis;
    spec.elements = 9;
    CHECK_THROWS_AS(spec.validate(), ContractViolation);
    spec.elements = 10;
    spec.noise_powers[0] = 0.0;
    CHECK_THROWS_AS(spec.validate(), ContractViolation);
}

TEST_CASE("unit conversions")
{
    CHECK(watts_to_dbm(1e-3) == doctest::Approx(0.0));
    CHECK(dbm_to_watts(-90.0) == doctest::Approx(1e-12));
    CHECK(db_to_linear(3.0) == doctest::Approx(1.9952623149688795));
}

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

#include "starris/linalg.hpp"
#include "starris/surrogates.hpp"

#include <doctest.h>

#include <random>

using namespace starris;

namespace
{

double direct_trace(const CMat &A, const CMat &B)
{
    double t = 0.0;
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            t += (A(i, j) * B(j, i)).real();
    return t;
}

// gamma Tr(Q H W H^H) summed entrywise, without any matrix products
double direct_quadratic_form(const CMat &Q, const CMat &H, const CMat &W)
{
    const int M = static_cast<int>(H.rows()), N = static_cast<int>(H.cols());
    cd acc = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    acc += Q(a, b) * H(b, i) * W(i, j) * std::conj(H(a, j));
    return acc.real();
}

} // namespace

TEST_CASE("trace identities agree with the direct trace")
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 1000; ++k)
    {
        const int n = 2 + k % 15;
        const CMat A = linalg::random_hermitian(n, rng);
        const CMat B = linalg::random_hermitian(n, rng);
        const double t = direct_trace(A, B);
        CHECK(std::abs(trace_identity_pos(A, B) - t) <= 1e-10 * std::max(1.0, std::abs(t)));
        CHECK(std::abs(trace_identity_neg(A, B) + t) <= 1e-10 * std::max(1.0, std::abs(t)));
    }
}

TEST_CASE("trace identity examples")
{
    const CMat I = CMat::Identity(2, 2);
    CHECK(trace_identity_pos(I, I) == doctest::Approx(2.0));
    CMat D = CMat::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = -1.0;
    CHECK(std::abs(trace_identity_pos(D, I)) < 1e-15);
    CMat N = CMat::Zero(2, 2);
    N(0, 1) = 1.0;
    CHECK_THROWS_AS(trace_identity_pos(N, I), ContractViolation);
    CHECK_THROWS_AS(trace_identity_neg(I, CMat::Identity(3, 3)), ContractViolation);
}

TEST_CASE("rank penalty examples")
{
    std::mt19937_64 rng(2);
    const CVec q = linalg::crandn(5, rng);
    CHECK(rank_penalty(q * q.adjoint()) < 1e-10);
    CHECK(rank_penalty(CMat::Identity(2, 2)) == doctest::Approx(1.0));
    CMat D = CMat::Zero(3, 3);
    D(0, 0) = 3.0;
    D(1, 1) = 1.0;
    CHECK(rank_penalty(D) == doctest::Approx(1.0));
}

TEST_CASE("rank penalty is zero exactly on rank-one matrices")
{
    std::mt19937_64 rng(4);
    for (int k = 0; k < 100; ++k)
    {
        const int n = 2 + k % 6;
        const int r = 1 + k % n;
        const CMat Q = linalg::random_psd(n, r, rng);
        if (r == 1)
            CHECK(rank_penalty(Q) < 1e-10 * Q.trace().real());
        else
            CHECK(rank_penalty(Q) > 1e-6);
    }
}

TEST_CASE("rank surrogate majorizes and touches at the anchor")
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 200; ++k)
    {
        const int n = 2 + k % 7;
        const CMat Q = linalg::random_psd(n, 1 + k % n, rng);
        const CMat Qn = linalg::random_psd(n, 1 + (k / 2) % n, rng);
        CHECK(sca_rank_surrogate(Q, Qn) >= rank_penalty(Q) - 1e-9);
        CHECK(std::abs(sca_rank_surrogate(Qn, Qn) - rank_penalty(Qn)) <= 1e-9 * std::max(1.0, Qn.trace().real()));
    }
    std::mt19937_64 rng2(9);
    const CVec q = linalg::crandn(4, rng2);
    CHECK(std::abs(sca_rank_surrogate(q * q.adjoint(), q * q.adjoint())) < 1e-10);
}

TEST_CASE("repeated top eigenvalue picks a deterministic eigenvector")
{
    const auto a = principal_eigenpair(CMat::Identity(3, 3));
    CHECK(a.value == doctest::Approx(1.0));
    CHECK(std::abs(a.vector[0] - 1.0) < 1e-12);
    CHECK(a.vector.tail(2).norm() < 1e-12);
    // any unit vector of the top eigenspace is a valid supergradient: majorization still holds
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k)
    {
        const CMat Q = linalg::random_psd(3, 3, rng);
        CHECK(sca_rank_surrogate(Q, CMat::Identity(3, 3)) >= rank_penalty(Q) - 1e-9);
    }
}

TEST_CASE("DC forms reproduce the lifted QoS terms")
{
    std::mt19937_64 rng(17);
    for (int k = 0; k < 100; ++k)
    {
        const int M = 2 + k % 5, N = 1 + k % 3;
        const CMat H = linalg::crandn(M, N, rng);
        const CMat Q = linalg::random_psd(M, 1 + k % M, rng);
        const CMat W = linalg::random_psd(N, 1, rng);
        const CMat Wb = linalg::random_psd(N, 1, rng);
        const double gamma = 0.1 * (k % 20);
        const double ups = direct_quadratic_form(Q, H, Wb);
        const double pi = direct_quadratic_form(Q, H, W);
        CHECK(std::abs(upsilon(Q, Wb, H, gamma) - gamma * ups) <= 1e-9 * std::max(1.0, std::abs(gamma * ups)));
        CHECK(std::abs(pi_term(Q, W, H) + pi) <= 1e-9 * std::max(1.0, std::abs(pi)));
    }
}

TEST_CASE("QoS surrogates majorize and are tangent at the anchor")
{
    std::mt19937_64 rng(23);
    for (int k = 0; k < 200; ++k)
    {
        const int M = 2 + k % 9, N = 1 + k % 4;
        const CMat H = linalg::crandn(M, N, rng);
        const double gamma = k % 10 == 0 ? 0.0 : 0.05 * (k % 40);
        const CMat Q = linalg::random_psd(M, 1 + k % M, rng), Qn = linalg::random_psd(M, 1, rng);
        const CMat W = linalg::random_psd(N, 1, rng), Wn = linalg::random_psd(N, 1, rng);
        const CMat Wb = linalg::random_psd(N, 1, rng), Wbn = linalg::random_psd(N, 1, rng);
        const auto s = sca_qos_surrogates(Q, W, Wb, Qn, Wn, Wbn, gamma, H);
        const double scale = std::max({1.0, Q.squaredNorm(), (H * W * H.adjoint()).squaredNorm(),
                                       (H * Wb * H.adjoint()).squaredNorm()});
        CHECK(s.upsilon_ub - upsilon(Q, Wb, H, gamma) >= -1e-9 * scale);
        CHECK(s.pi_ub - pi_term(Q, W, H) >= -1e-9 * scale);
        const auto t = sca_qos_surrogates(Qn, Wn, Wbn, Qn, Wn, Wbn, gamma, H);
        const double tscale = std::max({1.0, Qn.squaredNorm(), (H * Wn * H.adjoint()).squaredNorm()});
        CHECK(std::abs(t.upsilon_ub - upsilon(Qn, Wbn, H, gamma)) <= 1e-9 * tscale * (1.0 + gamma));
        CHECK(std::abs(t.pi_ub - pi_term(Qn, Wn, H)) <= 1e-9 * tscale);
        if (gamma == 0.0)
            CHECK(s.upsilon_ub == 0.0);
    }
}

TEST_CASE("binary penalty surrogate")
{
    CHECK(binary_penalty_surrogate(0.5, 0.5) == doctest::Approx(0.25));
    CHECK(binary_penalty_surrogate(0.3, 0.7) == doctest::Approx(0.37));
    CHECK(binary_penalty_surrogate(0.3, 0.7) >= 0.3 - 0.09);
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j <= 20; ++j)
        {
            const double b = i / 20.0, bn = j / 20.0;
            CHECK(binary_penalty_surrogate(b, bn) >= b - b * b - 1e-12);
        }
    CHECK(binary_penalty_surrogate(0.4, 0.0) == doctest::Approx(0.4));
}

TEST_CASE("rank-one extraction")
{
    CMat X = CMat::Zero(2, 2);
    X(0, 0) = 4.0;
    const auto f = extract_rank_one(X);
    CHECK(std::abs(f.vector[0] - 2.0) < 1e-12);
    CHECK(std::abs(f.vector[1]) < 1e-12);
    CHECK(f.residual == 0.0);
    CHECK(extract_rank_one(CMat::Identity(2, 2)).residual == doctest::Approx(1.0));
    const auto z = extract_rank_one(CMat::Zero(3, 3));
    CHECK(z.vector.norm() == 0.0);
    CHECK(z.residual == 0.0);

    std::mt19937_64 rng(5);
    const CVec q = linalg::crandn(6, rng);
    const auto g = extract_rank_one(q * q.adjoint());
    CHECK((g.vector * g.vector.adjoint() - q * q.adjoint()).norm() < 1e-10 * q.squaredNorm());
    CHECK(g.residual < 1e-12);
}

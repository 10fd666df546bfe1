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

#include <doctest.h>

#include <cmath>
#include <random>

using namespace starris;

TEST_CASE("users sit on opposite half-circles around the surface")
{
    GeometryConfig geo;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u})
    {
        std::mt19937_64 rng(seed);
        const auto u = place_users(geo, rng);
        CHECK(std::abs((u.t - geo.ris_position).norm() - 3.0) < 1e-9);
        CHECK(std::abs((u.r - geo.ris_position).norm() - 3.0) < 1e-9);
        CHECK(u.t.y() > geo.ris_position.y());
        CHECK(u.r.y() < geo.ris_position.y());
    }
    std::mt19937_64 a(10), b(11);
    CHECK((place_users(geo, a).t - place_users(geo, b).t).norm() > 1e-6);
}

TEST_CASE("large-scale gain")
{
    CHECK(large_scale_gain(1e-3, 50.0, 2.2) == doctest::Approx(1e-3 / std::pow(50.0, 2.2)).epsilon(1e-12));
    CHECK(large_scale_gain(1e-3, 50.0, 2.2) == doctest::Approx(1.848e-7).epsilon(1e-3));
}

TEST_CASE("surface layout")
{
    CHECK(default_horizontal_elements(10) == 5);
    CHECK(default_horizontal_elements(6) == 3);
    CHECK(default_horizontal_elements(8) == 4);
    CHECK(default_horizontal_elements(7) == 1);
    GeometryConfig geo;
    geo.m_h = 3;
    CHECK_THROWS_AS(geo.validate(10), ContractViolation);
}

TEST_CASE("pure line-of-sight limit has unit-modulus entries scaled by the path loss")
{
    const auto spec = make_problem(3, 10, Protocol::ES, Scenario::Unicast, 0.0);
    GeometryConfig geo;
    FadingConfig fad;
    fad.k_br = 1e12;
    fad.k_ru = 1e12;
    std::mt19937_64 rng(5);
    const auto real = generate_realization(spec, geo, fad, rng);
    const double g = std::sqrt(large_scale_gain(fad.rho0, 50.0, fad.alpha_br));
    CHECK(real.channels.G.rows() == 10);
    CHECK(real.channels.G.cols() == 3);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(std::abs(real.channels.G(i, j)) / g - 1.0) < 1e-4);
    const double gt = std::sqrt(large_scale_gain(fad.rho0, 3.0, fad.alpha_ru));
    CHECK(std::abs(real.channels.v_t.cwiseAbs().maxCoeff() / gt - 1.0) < 1e-4);
}

TEST_CASE("entry power equals the large-scale gain for any Rician factor")
{
    const auto spec = make_problem(1, 1, Protocol::ES, Scenario::Unicast, 0.0);
    GeometryConfig geo;
    const double g = large_scale_gain(1e-3, 50.0, 2.2);
    for (double k : {0.0, db_to_linear(3.0)})
    {
        FadingConfig fad;
        fad.k_br = k;
        fad.k_ru = k;
        std::mt19937_64 rng(99);
        double acc = 0.0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i)
            acc += std::norm(generate_channels(spec, geo, fad, rng).G(0, 0));
        CHECK(std::abs(acc / trials / g - 1.0) < 0.05);
    }
}

TEST_CASE("same seed gives identical channels")
{
    const auto spec = make_problem(2, 6, Protocol::ES, Scenario::Unicast, 0.0);
    std::mt19937_64 a(42), b(42);
    const auto x = generate_channels(spec, {}, {}, a);
    const auto y = generate_channels(spec, {}, {}, b);
    CHECK(x.G == y.G);
    CHECK(x.v_t == y.v_t);
    CHECK(x.v_r == y.v_r);
    CHECK(x.v_t.size() == 6);
}

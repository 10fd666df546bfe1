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

// Seeded Rician channel realizations for a BS, a planar STAR-RIS and two users placed on
// half-circles around the surface, one on each side.

#include "starris/core_model.hpp"

#include <random>
#include <utility>

namespace starris
{

using Vec3 = Eigen::Vector3d;

struct GeometryConfig
{
    Vec3 bs_position{0.0, 0.0, 0.0};
    Vec3 ris_position{0.0, 50.0, 0.0}; // surface lies in the x-z plane through this point
    double user_radius = 3.0;          // d_t = d_r
    int m_h = 0;                       // horizontal elements; 0 picks a default from M
    int m_v = 0;                       // vertical elements; 0 derives M / m_h

    // Resolves m_h / m_v for M elements; throws ContractViolation if m_h * m_v != M.
    std::pair<int, int> layout(int elements) const;
    void validate(int elements) const;
};

// 5 columns when M is a multiple of 5, otherwise the largest divisor of M not above 5.
int default_horizontal_elements(int elements);

struct FadingConfig
{
    double alpha_br = 2.2; // path-loss exponent BS -> surface
    double alpha_ru = 2.2; // path-loss exponent surface -> users
    double k_br = 1.9952623149688795; // Rician factor (linear), 3 dB
    double k_ru = 1.9952623149688795;
    double rho0 = 1e-3; // path loss at 1 m (linear), -30 dB

    void validate() const;
};

struct UserPositions
{
    Vec3 t; // transmission side
    Vec3 r; // reflection side (BS side)
};

UserPositions place_users(const GeometryConfig &geometry, std::mt19937_64 &rng);

// rho0 / d^alpha
double large_scale_gain(double rho0, double distance, double alpha);

// UPA response in the x-z plane with half-wavelength spacing, element m = i_v * m_h + i_h.
CVec upa_response(int m_h, int m_v, const Vec3 &direction);
// ULA along x with half-wavelength spacing.
CVec ula_response(int n, const Vec3 &direction);

struct ChannelRealization
{
    ChannelSet channels;
    UserPositions users;
};

ChannelRealization generate_realization(const ProblemSpec &spec, const GeometryConfig &geometry,
                                        const FadingConfig &fading, std::mt19937_64 &rng);
ChannelSet generate_channels(const ProblemSpec &spec, const GeometryConfig &geometry, const FadingConfig &fading,
                             std::mt19937_64 &rng);

} // namespace starris

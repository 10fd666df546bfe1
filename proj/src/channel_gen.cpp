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

#include <cmath>
#include <numbers>

namespace starris
{

int default_horizontal_elements(int elements)
{
    if (elements < 1)
        throw ContractViolation("element count must be positive");
    for (int h = 5; h >= 1; --h)
        if (elements % h == 0)
            return h;
    return 1;
}

std::pair<int, int> GeometryConfig::layout(int elements) const
{
    const int h = m_h > 0 ? m_h : default_horizontal_elements(elements);
    const int v = m_v > 0 ? m_v : elements / h;
    if (h * v != elements)
        throw ContractViolation("surface layout M_h * M_v does not match M");
    return {h, v};
}

void GeometryConfig::validate(int elements) const
{
    if (!(user_radius > 0.0))
        throw ContractViolation("user radius must be positive");
    if (!bs_position.allFinite() || !ris_position.allFinite())
        throw ContractViolation("positions must be finite");
    layout(elements);
}

void FadingConfig::validate() const
{
    if (!(alpha_br > 0.0) || !(alpha_ru > 0.0))
        throw ContractViolation("path-loss exponents must be positive");
    if (!(k_br >= 0.0) || !(k_ru >= 0.0))
        throw ContractViolation("Rician factors must be nonnegative");
    if (!(rho0 > 0.0))
        throw ContractViolation("reference path loss must be positive");
}

UserPositions place_users(const GeometryConfig &geometry, std::mt19937_64 &rng)
{
    if (!(geometry.user_radius > 0.0))
        throw ContractViolation("user radius must be positive");
    std::uniform_real_distribution<double> az(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    const double r = geometry.user_radius;
    // the BS sits on the -y side of the surface, which is therefore the reflection side
    const double side = geometry.bs_position.y() <= geometry.ris_position.y() ? 1.0 : -1.0;
    const double phi_t = az(rng);
    const double phi_r = az(rng);
    UserPositions u;
    u.t = geometry.ris_position + Vec3(r * std::sin(phi_t), side * r * std::cos(phi_t), 0.0);
    u.r = geometry.ris_position + Vec3(r * std::sin(phi_r), -side * r * std::cos(phi_r), 0.0);
    return u;
}

double large_scale_gain(double rho0, double distance, double alpha)
{
    if (!(distance > 0.0))
        throw ContractViolation("link distance must be positive");
    return rho0 / std::pow(distance, alpha);
}

CVec upa_response(int m_h, int m_v, const Vec3 &direction)
{
    const Vec3 u = direction.normalized();
    CVec a(m_h * m_v);
    for (int iv = 0; iv < m_v; ++iv)
        for (int ih = 0; ih < m_h; ++ih)
            a[iv * m_h + ih] = std::polar(1.0, std::numbers::pi * (ih * u.x() + iv * u.z()));
    return a;
}

CVec ula_response(int n, const Vec3 &direction)
{
    const Vec3 u = direction.normalized();
    CVec b(n);
    for (int i = 0; i < n; ++i)
        b[i] = std::polar(1.0, std::numbers::pi * i * u.x());
    return b;
}

namespace
{

template <class Los>
CMat rician(const Los &los, double k, double gain, std::mt19937_64 &rng)
{
    const CMat nlos = linalg::crandn(los.rows(), los.cols(), rng);
    if (std::isinf(k))
        return std::sqrt(gain) * CMat(los);
    return std::sqrt(gain) * (std::sqrt(k / (k + 1.0)) * CMat(los) + std::sqrt(1.0 / (k + 1.0)) * nlos);
}

} // namespace

ChannelRealization generate_realization(const ProblemSpec &spec, const GeometryConfig &geometry,
                                        const FadingConfig &fading, std::mt19937_64 &rng)
{
    spec.validate();
    geometry.validate(spec.elements);
    fading.validate();
    const auto [m_h, m_v] = geometry.layout(spec.elements);

    ChannelRealization out;
    out.users = place_users(geometry, rng);

    const Vec3 &bs = geometry.bs_position;
    const Vec3 &ris = geometry.ris_position;
    const CMat g_los = upa_response(m_h, m_v, bs - ris) * ula_response(spec.antennas, ris - bs).adjoint();
    out.channels.G = rician(g_los, fading.k_br, large_scale_gain(fading.rho0, (ris - bs).norm(), fading.alpha_br), rng);

    const Vec3 *pos[2] = {&out.users.t, &out.users.r};
    CVec *dst[2] = {&out.channels.v_t, &out.channels.v_r};
    for (int k = 0; k < 2; ++k)
    {
        const CVec los = upa_response(m_h, m_v, *pos[k] - ris);
        const double gain = large_scale_gain(fading.rho0, (*pos[k] - ris).norm(), fading.alpha_ru);
        *dst[k] = rician(los, fading.k_ru, gain, rng).col(0);
    }
    return out;
}

ChannelSet generate_channels(const ProblemSpec &spec, const GeometryConfig &geometry, const FadingConfig &fading,
                             std::mt19937_64 &rng)
{
    return generate_realization(spec, geometry, fading, rng).channels;
}

} // namespace starris

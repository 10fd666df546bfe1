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

#include "starris/penalty_solver.hpp"
#include "starris/linalg.hpp"
#include "starris/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

namespace starris
{

using conic::AffineMatrix;
using conic::AffineScalar;
using conic::ConicStatus;
using conic::HermitianVar;

void PenaltyOptions::validate() const
{
    if (!(omega > 1.0) || !(varpi > 1.0))
        throw ContractViolation("penalty scaling factors must exceed 1");
    if (!(eta0 > 0.0) || !(chi0 > 0.0) || !(epsilon_inner > 0.0) || !(epsilon_violation > 0.0) ||
        !(solver_tolerance > 0.0) || !(rank_tolerance > 0.0))
        throw ContractViolation("penalty factors and tolerances must be positive");
    if (n_max < 1 || outer_max < 1 || init_attempts < 1 || starts < 1)
        throw ContractViolation("iteration limits must be positive");
    if (!(eta_cap >= eta0) || !(chi_cap >= chi0))
        throw ContractViolation("penalty caps must not be below the initial factors");
}

SurfaceLayout default_layout(const ProblemSpec &spec)
{
    SurfaceLayout layout;
    const int M = spec.elements;
    switch (spec.protocol)
    {
    case Protocol::ES:
        layout.mode = AmplitudeMode::Free;
        break;
    case Protocol::MS:
        layout.mode = AmplitudeMode::Binary;
        break;
    case Protocol::UES:
        layout.mode = AmplitudeMode::Uniform;
        break;
    case Protocol::ConvRis:
        layout.mode = AmplitudeMode::Fixed;
        for (int m = 0; m < M; ++m)
            layout.support[m < M / 2 ? T : R].push_back(m);
        return layout;
    case Protocol::TS:
        throw ContractViolation("the penalty solver does not handle time switching");
    }
    for (int k = 0; k < 2; ++k)
        for (int m = 0; m < M; ++m)
            layout.support[k].push_back(m);
    return layout;
}

namespace
{

bool multicast(const ProblemSpec &spec)
{
    return spec.scenario == Scenario::Multicast;
}

CMat restrict(const CMat &A, const std::vector<int> &idx)
{
    CMat out(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(i, j) = A(idx[i], idx[j]);
    return out;
}

CMat rows_of(const CMat &A, const std::vector<int> &idx)
{
    CMat out(idx.size(), A.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(i) = A.row(idx[i]);
    return out;
}

CMat embed(const CMat &A, const std::vector<int> &idx, int M)
{
    CMat out = CMat::Zero(M, M);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(idx[i], idx[j]) = A(i, j);
    return out;
}

const CMat &W_of(const LiftedState &s, const ProblemSpec &spec, User k)
{
    return (multicast(spec) || k == T) ? s.W_t : s.W_r;
}

double lifted_power(const LiftedState &s, const ProblemSpec &spec)
{
    double p = s.W_t.trace().real();
    if (!multicast(spec))
        p += s.W_r.trace().real();
    return p;
}

std::array<CMat, 2> cascades(const ChannelSet &ch)
{
    return {cascade_channel(ch.v_t, ch.G), cascade_channel(ch.v_r, ch.G)};
}

void validate_layout(const SurfaceLayout &layout, int M)
{
    std::vector<int> seen(M, 0);
    for (int k = 0; k < 2; ++k)
    {
        if (layout.support[k].empty())
            throw ContractViolation("every user needs at least one surface element");
        for (int m : layout.support[k])
        {
            if (m < 0 || m >= M)
                throw ContractViolation("support index out of range");
            ++seen[m];
        }
    }
    for (int m = 0; m < M; ++m)
    {
        if (seen[m] == 0)
            throw ContractViolation("every element must serve at least one user");
        if (layout.mode == AmplitudeMode::Fixed && seen[m] != 1)
            throw ContractViolation("fixed layouts assign each element to exactly one user");
        if (layout.mode != AmplitudeMode::Fixed && seen[m] != 2)
            throw ContractViolation("continuous layouts expose every element to both users");
    }
}

} // namespace

double penalty_violation(const LiftedState &state, AmplitudeMode mode)
{
    double v = std::max(rank_penalty(state.Q_t), rank_penalty(state.Q_r));
    if (mode == AmplitudeMode::Binary)
        for (const CMat *Q : {&state.Q_t, &state.Q_r})
            for (int m = 0; m < Q->rows(); ++m)
            {
                const double b = (*Q)(m, m).real();
                v = std::max(v, b - b * b);
            }
    return v;
}

RelaxedSubproblem build_relaxed_subproblem(const ProblemSpec &spec, const ChannelSet &channels,
                                           const LiftedState &anchors, double eta, double chi, double power_scale)
{
    return build_relaxed_subproblem(spec, channels, default_layout(spec), anchors, eta, chi, power_scale);
}

RelaxedSubproblem build_relaxed_subproblem(const ProblemSpec &spec, const ChannelSet &channels,
                                           const SurfaceLayout &layout, const LiftedState &anchors, double eta,
                                           double chi, double power_scale)
{
    spec.validate();
    channels.validate(spec);
    const int M = spec.elements;
    const int N = spec.antennas;
    validate_layout(layout, M);
    if (anchors.Q_t.rows() != M || anchors.Q_r.rows() != M || anchors.W_t.rows() != N ||
        (!multicast(spec) && anchors.W_r.rows() != N))
        throw ContractViolation("anchor dimensions do not match the problem");
    if (!(eta >= 0.0) || !(chi >= 0.0))
        throw ContractViolation("penalty factors must be nonnegative");

    const double ps = power_scale > 0.0 ? power_scale : lifted_power(anchors, spec);
    if (!(ps > 0.0))
        throw ContractViolation("power scale must be positive");

    RelaxedSubproblem sub;
    sub.power_scale = ps;
    auto &prog = sub.program;
    const bool mc = multicast(spec);
    const std::array<CMat, 2> H = cascades(channels);

    for (int k = 0; k < 2; ++k)
        sub.Q[k] = prog.add_hermitian_psd(static_cast<int>(layout.support[k].size()), k == T ? "Q_t" : "Q_r");
    sub.W[T] = prog.add_hermitian_psd(N, mc ? "W_c" : "W_t");
    sub.W[R] = mc ? sub.W[T] : prog.add_hermitian_psd(N, "W_r");
    sub.num_beamformer_variables = mc ? 1 : 2;

    // amplitude constraints on the lifted diagonals
    auto position = [&](int k, int m) {
        const auto &s = layout.support[k];
        const auto it = std::find(s.begin(), s.end(), m);
        return it == s.end() ? -1 : static_cast<int>(it - s.begin());
    };
    for (int m = 0; m < M; ++m)
    {
        AffineScalar e(-spec.energy_budget);
        for (int k = 0; k < 2; ++k)
            if (const int i = position(k, m); i >= 0)
                e.add(AffineScalar::diag_entry(sub.Q[k], i));
        prog.add_equality(e, "energy");
    }
    if (layout.mode == AmplitudeMode::Uniform)
        for (int i = 1; i < static_cast<int>(layout.support[T].size()); ++i)
            prog.add_equality(AffineScalar::diag_entry(sub.Q[T], i) - AffineScalar::diag_entry(sub.Q[T], 0),
                              "ues_uniform");

    // objective, in units of ps watts
    prog.add_objective(AffineScalar::trace(sub.W[T]));
    if (!mc)
        prog.add_objective(AffineScalar::trace(sub.W[R]));
    for (int k = 0; k < 2; ++k)
    {
        const CMat Qn = restrict(k == T ? anchors.Q_t : anchors.Q_r, layout.support[k]);
        const auto top = principal_eigenpair(Qn);
        prog.add_nuclear_norm(sub.Q[k], eta / ps);
        prog.add_objective(AffineScalar::inner(sub.Q[k], top.vector * top.vector.adjoint()), -eta / ps);
        if (layout.mode == AmplitudeMode::Binary)
            for (int i = 0; i < Qn.rows(); ++i)
            {
                const double bn = std::clamp(Qn(i, i).real(), 0.0, 1.0);
                AffineScalar omega_term = (1.0 - 2.0 * bn) * AffineScalar::diag_entry(sub.Q[k], i);
                omega_term.add_constant(bn * bn);
                prog.add_objective(omega_term, chi / ps);
                ++sub.num_omega_terms;
            }
    }

    // QoS majorizers, normalized by the noise power
    for (int k = 0; k < 2; ++k)
    {
        const User u = static_cast<User>(k);
        const double gamma = spec.sinr_target(u);
        const CMat F = rows_of(H[k], layout.support[k]) * std::sqrt(ps / spec.noise_powers[k]);
        const CMat Qn = restrict(k == T ? anchors.Q_t : anchors.Q_r, layout.support[k]);
        const CMat Wn = W_of(anchors, spec, u) / ps;
        const CMat Xn = linalg::hermitian_part(F * Wn * F.adjoint());

        // Tr(QX) = Tr((aQ)(X/a)); a balances the curvature the majorizer puts on Q and on X
        const double qn = Qn.norm(), xn = Xn.norm();
        const double a2 = qn > 0.0 && xn > 0.0 ? xn / qn : 1.0;
        const double a = std::sqrt(a2);

        std::vector<conic::QuadraticTerm> terms;
        AffineScalar lin(gamma);
        const bool interference = !mc && gamma > 0.0;
        const double qcoef = interference ? gamma + 1.0 : 1.0;

        AffineMatrix own(static_cast<int>(layout.support[k].size()));
        own.add(AffineMatrix::of(sub.Q[k]), a);
        own.add(AffineMatrix::congruence(sub.W[k], F), -1.0 / a);
        terms.push_back({0.5, std::move(own)});
        lin.add(AffineScalar::inner(sub.Q[k], Qn), -qcoef * a2);
        lin.add(AffineScalar::inner(sub.W[k], F.adjoint() * Xn * F), -1.0 / a2);
        lin.add_constant(0.5 * qcoef * a2 * Qn.squaredNorm() + 0.5 / a2 * Xn.squaredNorm());

        if (interference)
        {
            const User o = other(u);
            const CMat Wbn = W_of(anchors, spec, o) / ps;
            const CMat Xbn = linalg::hermitian_part(F * Wbn * F.adjoint());
            AffineMatrix cross(static_cast<int>(layout.support[k].size()));
            cross.add(AffineMatrix::of(sub.Q[k]), a);
            cross.add(AffineMatrix::congruence(sub.W[o], F), 1.0 / a);
            terms.push_back({0.5 * gamma, std::move(cross)});
            lin.add(AffineScalar::inner(sub.W[o], F.adjoint() * Xbn * F), -gamma / a2);
            lin.add_constant(0.5 * gamma / a2 * Xbn.squaredNorm());
        }
        prog.add_quadratic_inequality(std::move(terms), lin, k == T ? "qos_t" : "qos_r");
    }
    return sub;
}

std::optional<std::array<double, 2>> balance_powers(const ProblemSpec &spec, const std::array<CMat, 2> &H,
                                                    const std::array<CVec, 2> &q,
                                                    const std::array<CVec, 2> &directions)
{
    std::array<CVec, 2> h;
    for (int k = 0; k < 2; ++k)
        h[k] = H[k].adjoint() * q[k];
    const double g0 = spec.sinr_target(T), g1 = spec.sinr_target(R);
    const double s0 = spec.noise_powers[0], s1 = spec.noise_powers[1];
    if (multicast(spec))
    {
        const CVec &d = directions[0];
        double p = 0.0;
        for (int k = 0; k < 2; ++k)
        {
            const double gamma = k == 0 ? g0 : g1;
            if (gamma == 0.0)
                continue;
            const double a = std::norm(h[k].dot(d));
            if (!(a > 0.0))
                return std::nullopt;
            p = std::max(p, gamma * spec.noise_powers[k] / a);
        }
        return std::array<double, 2>{p, 0.0};
    }
    // p_t a_tt - g_t a_tr p_r = g_t s_t ; -g_r a_rt p_t + p_r a_rr = g_r s_r
    const double att = std::norm(h[0].dot(directions[0]));
    const double atr = std::norm(h[0].dot(directions[1]));
    const double art = std::norm(h[1].dot(directions[0]));
    const double arr = std::norm(h[1].dot(directions[1]));
    const double det = att * arr - g0 * g1 * atr * art;
    if (!(det > 0.0))
        return std::nullopt;
    const double pt = (g0 * s0 * arr + g0 * atr * g1 * s1) / det;
    const double pr = (g1 * s1 * att + g1 * art * g0 * s0) / det;
    if (!(pt >= 0.0) || !(pr >= 0.0) || !std::isfinite(pt) || !std::isfinite(pr))
        return std::nullopt;
    return std::array<double, 2>{pt, pr};
}

namespace
{

CVec unit_or_zero(const CVec &v)
{
    const double n = v.norm();
    return n > 0.0 ? CVec(v / n) : CVec::Zero(v.size());
}

// Candidate beamformer directions for fixed surface vectors; returns the cheapest feasible choice.
std::optional<std::pair<std::array<CVec, 2>, std::array<double, 2>>>
best_directions(const ProblemSpec &spec, const std::array<CMat, 2> &H, const std::array<CVec, 2> &q)
{
    const int N = spec.antennas;
    const CVec ht = H[0].adjoint() * q[0];
    const CVec hr = H[1].adjoint() * q[1];
    std::vector<std::array<CVec, 2>> candidates;
    if (multicast(spec))
    {
        const CVec a = unit_or_zero(ht), b = unit_or_zero(hr);
        candidates.push_back({a, a});
        candidates.push_back({b, b});
        for (int i = 0; i < 8; ++i)
        {
            const CVec c = unit_or_zero(a + std::polar(1.0, std::numbers::pi * i / 4.0) * b);
            if (c.norm() > 0.0)
                candidates.push_back({c, c});
        }
    }
    else
    {
        candidates.push_back({unit_or_zero(ht), unit_or_zero(hr)});
        if (N >= 2)
        {
            const CVec ut = unit_or_zero(hr), ur = unit_or_zero(ht);
            const CVec zt = unit_or_zero(ht - ut * ut.dot(ht));
            const CVec zr = unit_or_zero(hr - ur * ur.dot(hr));
            if (zt.norm() > 0.0 && zr.norm() > 0.0)
                candidates.push_back({zt, zr});
        }
    }
    std::optional<std::pair<std::array<CVec, 2>, std::array<double, 2>>> best;
    for (const auto &d : candidates)
    {
        const auto p = balance_powers(spec, H, q, d);
        if (!p)
            continue;
        if (!best || (*p)[0] + (*p)[1] < best->second[0] + best->second[1])
            best = std::make_pair(d, *p);
    }
    return best;
}

} // namespace

namespace
{

std::optional<LiftedState> assemble_point(const ProblemSpec &spec, const std::array<CMat, 2> &H,
                                          const std::array<RVec, 2> &beta, const std::array<CVec, 2> &q,
                                          double margin)
{
    const auto dirs = best_directions(spec, H, q);
    if (!dirs)
        return std::nullopt;
    LiftedState s;
    s.Q_t = q[0] * q[0].adjoint();
    s.Q_r = q[1] * q[1].adjoint();
    s.beta_t = beta[0];
    s.beta_r = beta[1];
    const auto &[d, p] = *dirs;
    const CVec wt = std::sqrt(margin * p[0]) * d[0];
    s.W_t = wt * wt.adjoint();
    if (multicast(spec))
        s.W_r = CMat(0, 0);
    else
    {
        const CVec wr = std::sqrt(margin * p[1]) * d[1];
        s.W_r = wr * wr.adjoint();
    }
    if (!(lifted_power(s, spec) > 0.0))
        return std::nullopt;
    return s;
}

double tight_power(const ProblemSpec &spec, const std::array<CMat, 2> &H, const std::array<CVec, 2> &q)
{
    const auto d = best_directions(spec, H, q);
    return d ? d->second[0] + d->second[1] : std::numeric_limits<double>::infinity();
}

// Coordinate descent on the surface vectors: per-element phases on a 16-level grid and, for
// continuous amplitudes, the per-element (ES) or shared (UES) split, scored by tight_power.
void descend(const ProblemSpec &spec, const std::array<CMat, 2> &H, AmplitudeMode mode,
             const std::array<std::vector<int>, 2> &support, std::array<RVec, 2> &beta, std::array<CVec, 2> &q)
{
    constexpr int kPhases = 16, kSplits = 19, kSweeps = 30;
    const double c = spec.energy_budget;
    const int M = spec.elements;
    double best = tight_power(spec, H, q);
    if (!std::isfinite(best))
        return;
    auto set_split = [&](int m, double bt) {
        beta[0][m] = bt;
        beta[1][m] = c - bt;
        for (int k = 0; k < 2; ++k)
            q[k][m] = std::polar(std::sqrt(beta[k][m]), std::arg(q[k][m]));
    };
    for (int sweep = 0; sweep < kSweeps; ++sweep)
    {
        const double start = best;
        for (int k = 0; k < 2; ++k)
            for (int m : support[k])
            {
                const cd keep = q[k][m];
                cd pick = keep;
                for (int j = 0; j < kPhases; ++j)
                {
                    q[k][m] = std::polar(std::abs(keep), 2.0 * std::numbers::pi * j / kPhases);
                    const double p = tight_power(spec, H, q);
                    if (p < best)
                    {
                        best = p;
                        pick = q[k][m];
                    }
                }
                q[k][m] = pick;
            }
        if (mode == AmplitudeMode::Free)
            for (int m = 0; m < M; ++m)
            {
                const double keep = beta[0][m];
                double pick = keep;
                for (int i = 1; i <= kSplits; ++i)
                {
                    set_split(m, c * i / (kSplits + 1));
                    const double p = tight_power(spec, H, q);
                    if (p < best)
                    {
                        best = p;
                        pick = beta[0][m];
                    }
                }
                set_split(m, pick);
            }
        if (mode == AmplitudeMode::Uniform)
        {
            const double keep = beta[0][0];
            double pick = keep;
            for (int i = 1; i <= kSplits; ++i)
            {
                for (int m = 0; m < M; ++m)
                    set_split(m, c * i / (kSplits + 1));
                const double p = tight_power(spec, H, q);
                if (p < best)
                {
                    best = p;
                    pick = beta[0][0];
                }
            }
            for (int m = 0; m < M; ++m)
                set_split(m, pick);
        }
        if (!(best < start * (1.0 - 1e-6)))
            break;
    }
}

} // namespace

std::optional<LiftedState> initial_point(const ProblemSpec &spec, const ChannelSet &channels,
                                         const SurfaceLayout &layout, std::uint64_t seed, int attempts, double margin)
{
    const int M = spec.elements;
    validate_layout(layout, M);
    const auto H = cascades(channels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::bernoulli_distribution coin(0.5);
    const double c = spec.energy_budget;
    constexpr int kDraws = 8;
    std::optional<LiftedState> best;
    int found = 0;

    for (int attempt = 0; attempt < attempts; ++attempt)
    {
        std::array<RVec, 2> beta{RVec::Zero(M), RVec::Zero(M)};
        switch (layout.mode)
        {
        case AmplitudeMode::Free:
        case AmplitudeMode::Uniform:
            beta[0].setConstant(0.5 * c);
            beta[1].setConstant(0.5 * c);
            break;
        case AmplitudeMode::Binary:
        {
            std::vector<int> assign(M);
            do
            {
                for (int m = 0; m < M; ++m)
                    assign[m] = coin(rng) ? 1 : 0;
            } while (M >= 2 && (std::count(assign.begin(), assign.end(), 0) == 0 ||
                                std::count(assign.begin(), assign.end(), 1) == 0));
            for (int m = 0; m < M; ++m)
                beta[assign[m]][m] = c;
            break;
        }
        case AmplitudeMode::Fixed:
            for (int k = 0; k < 2; ++k)
                for (int m : layout.support[k])
                    beta[k][m] = c;
            break;
        }
        std::array<CVec, 2> q;
        for (int k = 0; k < 2; ++k)
        {
            q[k] = CVec::Zero(M);
            for (int m = 0; m < M; ++m)
                q[k][m] = std::polar(std::sqrt(beta[k][m]), phase(rng));
        }
        if (auto s = assemble_point(spec, H, beta, q, margin))
        {
            if (!best || lifted_power(*s, spec) < lifted_power(*best, spec))
                best = std::move(s);
            if (++found == kDraws)
                break;
        }
    }
    return best;
}

std::optional<LiftedState> aligned_point(const ProblemSpec &spec, const ChannelSet &channels,
                                         const SurfaceLayout &layout, double margin)
{
    const int M = spec.elements;
    validate_layout(layout, M);
    const auto H = cascades(channels);
    const double c = spec.energy_budget;
    std::array<RVec, 2> beta{RVec::Zero(M), RVec::Zero(M)};
    std::array<std::vector<int>, 2> support;
    switch (layout.mode)
    {
    case AmplitudeMode::Free:
    case AmplitudeMode::Uniform:
        beta[0].setConstant(0.5 * c);
        beta[1].setConstant(0.5 * c);
        for (int m = 0; m < M; ++m)
        {
            support[0].push_back(m);
            support[1].push_back(m);
        }
        break;
    case AmplitudeMode::Binary:
    {
        std::vector<int> assign(M);
        for (int m = 0; m < M; ++m)
            assign[m] = H[0].row(m).squaredNorm() >= H[1].row(m).squaredNorm() ? 0 : 1;
        for (int k = 0; k < 2; ++k)
            if (M >= 2 && std::count(assign.begin(), assign.end(), k) == 0)
            {
                int best = 0;
                for (int m = 1; m < M; ++m)
                    if (H[k].row(m).squaredNorm() / H[1 - k].row(m).squaredNorm() >
                        H[k].row(best).squaredNorm() / H[1 - k].row(best).squaredNorm())
                        best = m;
                assign[best] = k;
            }
        for (int m = 0; m < M; ++m)
        {
            beta[assign[m]][m] = c;
            support[assign[m]].push_back(m);
        }
        break;
    }
    case AmplitudeMode::Fixed:
        for (int k = 0; k < 2; ++k)
            for (int m : layout.support[k])
            {
                beta[k][m] = c;
                support[k].push_back(m);
            }
        break;
    }
    std::array<CVec, 2> q;
    for (int k = 0; k < 2; ++k)
    {
        q[k] = CVec::Zero(M);
        if (support[k].empty())
            continue;
        const CMat Hs = rows_of(H[k], support[k]);
        Eigen::SelfAdjointEigenSolver<CMat> es(Hs * Hs.adjoint());
        const CVec v = es.eigenvectors().col(es.eigenvalues().size() - 1);
        for (std::size_t i = 0; i < support[k].size(); ++i)
        {
            const int m = support[k][i];
            q[k][m] = std::polar(std::sqrt(beta[k][m]), std::abs(v[i]) > 0.0 ? std::arg(v[i]) : 0.0);
        }
    }
    descend(spec, H, layout.mode, support, beta, q);
    return assemble_point(spec, H, beta, q, margin);
}

namespace
{

struct InnerOutcome
{
    bool ok = true;
    bool infeasible = false;
    int iterations = 0;
    LiftedState state;
};

class PenaltyRun
{
public:
    PenaltyRun(const ProblemSpec &spec, const ChannelSet &channels, const PenaltyOptions &opt)
        : spec_(spec), channels_(channels), opt_(opt), H_(cascades(channels))
    {
    }

    double penalized_value(const LiftedState &s, const SurfaceLayout &layout, double eta, double chi) const
    {
        double v = lifted_power(s, spec_) + eta * (rank_penalty(s.Q_t) + rank_penalty(s.Q_r));
        if (layout.mode == AmplitudeMode::Binary)
            for (const CMat *Q : {&s.Q_t, &s.Q_r})
                for (int m = 0; m < Q->rows(); ++m)
                {
                    const double b = (*Q)(m, m).real();
                    v += chi * (b - b * b);
                }
        return v;
    }

    // Inner SCA loop at fixed penalty factors, starting from (and updating) anchors.
    InnerOutcome inner_loop(const SurfaceLayout &layout, const LiftedState &start, double eta, double chi, int outer,
                            SolverReport &report)
    {
        InnerOutcome out;
        out.state = start;
        double prev = penalized_value(start, layout, eta, chi);
        conic::SolverSettings settings;
        settings.tolerance = opt_.solver_tolerance;
        for (int n = 0; n < opt_.n_max; ++n)
        {
            const auto sub = build_relaxed_subproblem(spec_, channels_, layout, out.state, eta, chi, ps_);
            const auto res = conic::solve(sub.program, settings);
            ++report.conic_solves;
            if (res.status == ConicStatus::Infeasible)
            {
                out.ok = false;
                out.infeasible = true;
                return out;
            }
            if (res.status != ConicStatus::Optimal)
            {
                out.ok = false;
                return out;
            }
            LiftedState next;
            next.Q_t = embed(res.value(sub.Q[T]), layout.support[T], spec_.elements);
            next.Q_r = embed(res.value(sub.Q[R]), layout.support[R], spec_.elements);
            next.W_t = ps_ * res.value(sub.W[T]);
            next.W_r = multicast(spec_) ? CMat(0, 0) : CMat(ps_ * res.value(sub.W[R]));
            next.beta_t = next.Q_t.diagonal().real();
            next.beta_r = next.Q_r.diagonal().real();
            out.state = std::move(next);
            ++out.iterations;

            const double value = ps_ * res.objective;
            TraceRecord rec;
            rec.outer = outer;
            rec.inner = n;
            rec.power = lifted_power(out.state, spec_);
            rec.penalized_objective = value;
            rec.violation = penalty_violation(out.state, layout.mode);
            report.records.push_back(rec);
            report.objective_trace.push_back(rec.power);
            report.penalized_objective_trace.push_back(value);

            const double decrease = (prev - value) / std::max(std::abs(prev), 1e-300);
            prev = value;
            if (decrease < opt_.epsilon_inner)
                break;
        }
        return out;
    }

    PenaltyResult run(const std::optional<LiftedState> &initial)
    {
        PenaltyResult result;
        SolverReport &report = result.report;
        const SurfaceLayout layout = default_layout(spec_);

        LiftedState state;
        if (initial)
            state = *initial;
        else
        {
            auto init = initial_point(spec_, channels_, layout, opt_.seed, opt_.init_attempts);
            if (!init)
            {
                report.status = SolverStatus::Infeasible;
                report.message = "no QoS-feasible starting point found";
                result.solution = empty_solution();
                return result;
            }
            state = std::move(*init);
        }
        ps_ = lifted_power(state, spec_);
        if (!(ps_ > 0.0))
        {
            // zero rate targets: the zero beamformers are optimal
            result.lifted = state;
            result.solution = finalize(state, layout, report);
            return result;
        }

        double eta = opt_.eta0, chi = opt_.chi0;
        bool converged = false;
        for (int outer = 0; outer < opt_.outer_max; ++outer)
        {
            auto inner = inner_loop(layout, state, eta, chi, outer, report);
            report.outer_iterations = outer + 1;
            report.inner_iterations_per_outer.push_back(inner.iterations);
            if (!inner.ok)
            {
                report.failed_outer = outer;
                report.status = inner.infeasible ? SolverStatus::Infeasible : SolverStatus::SolverFailure;
                report.message = inner.infeasible ? "convex subproblem infeasible" : "conic solver failure";
                if (inner.iterations > 0)
                    state = inner.state;
                break;
            }
            state = std::move(inner.state);
            const double v = penalty_violation(state, layout.mode);
            report.violation_trace.push_back(v);
            if (v <= opt_.epsilon_violation)
            {
                converged = true;
                break;
            }
            eta = std::min(eta * opt_.omega, opt_.eta_cap);
            chi = std::min(chi * opt_.varpi, opt_.chi_cap);
        }
        if (converged)
            report.status = SolverStatus::Converged;
        else if (report.failed_outer < 0)
            report.status = SolverStatus::MaxIter;

        if (layout.mode == AmplitudeMode::Binary)
            report.binary_violation = binary_residual(state);

        const bool usable = converged || report.outer_iterations > 1 ||
                            (!report.inner_iterations_per_outer.empty() && report.inner_iterations_per_outer[0] > 0);
        if (layout.mode == AmplitudeMode::Binary && opt_.ms_polish && usable &&
            report.status != SolverStatus::Infeasible && polish(state, eta, report) && !converged)
        {
            report.message += report.message.empty() ? "" : "; ";
            report.message += "binary assignment recovered by mode-switching polish";
        }

        result.lifted = state;
        result.solution = finalize(state, polished_ ? polished_layout_ : layout, report);
        return result;
    }

private:
    static double binary_residual(const LiftedState &s)
    {
        double v = 0.0;
        for (const RVec *b : {&s.beta_t, &s.beta_r})
            for (int m = 0; m < b->size(); ++m)
                v = std::max(v, (*b)[m] - (*b)[m] * (*b)[m]);
        return v;
    }

    BeamformingSolution empty_solution() const
    {
        BeamformingSolution sol;
        sol.protocol = spec_.protocol;
        sol.scenario = spec_.scenario;
        sol.w_t = CVec::Zero(spec_.antennas);
        sol.w_r = CVec::Zero(spec_.antennas);
        const int M = spec_.elements;
        sol.coefficients.beta_t = RVec::Constant(M, 0.5 * spec_.energy_budget);
        sol.coefficients.beta_r = sol.coefficients.beta_t;
        sol.coefficients.theta_t = RVec::Zero(M);
        sol.coefficients.theta_r = RVec::Zero(M);
        return sol;
    }

    // Surface vectors from the lifted matrices, with amplitudes meeting the energy split exactly.
    std::array<CVec, 2> surface_vectors(const LiftedState &s, const SurfaceLayout &layout, double &residual) const
    {
        const int M = spec_.elements;
        std::array<CVec, 2> q;
        for (int k = 0; k < 2; ++k)
        {
            const CMat Qs = restrict(k == T ? s.Q_t : s.Q_r, layout.support[k]);
            const auto f = extract_rank_one(Qs);
            residual = std::max(residual, f.residual);
            q[k] = CVec::Zero(M);
            for (std::size_t i = 0; i < layout.support[k].size(); ++i)
                q[k][layout.support[k][i]] = f.vector[i];
        }
        const double c = spec_.energy_budget;
        for (int m = 0; m < M; ++m)
        {
            const double at = std::norm(q[0][m]), ar = std::norm(q[1][m]);
            const double sum = at + ar;
            for (int k = 0; k < 2; ++k)
            {
                const double a = k == 0 ? at : ar;
                const double target = sum > 0.0 ? c * a / sum : 0.5 * c;
                const double ph = std::abs(q[k][m]) > 0.0 ? std::arg(q[k][m]) : 0.0;
                q[k][m] = std::polar(std::sqrt(target), ph);
            }
        }
        if (layout.mode == AmplitudeMode::Uniform)
        {
            // shared split from the mean transmitted fraction
            double bt = 0.0;
            for (int m = 0; m < M; ++m)
                bt += std::norm(q[0][m]);
            bt /= M;
            for (int m = 0; m < M; ++m)
            {
                q[0][m] = std::polar(std::sqrt(bt), std::arg(q[0][m]));
                q[1][m] = std::polar(std::sqrt(std::max(c - bt, 0.0)), std::arg(q[1][m]));
            }
        }
        return q;
    }

    BeamformingSolution finalize(const LiftedState &s, const SurfaceLayout &layout, SolverReport &report) const
    {
        BeamformingSolution sol;
        sol.protocol = spec_.protocol;
        sol.scenario = spec_.scenario;
        double residual = 0.0;
        const auto q = surface_vectors(s, layout, residual);
        for (int k = 0; k < 2; ++k)
            StarCoefficients::from_vector(q[k], sol.coefficients.beta(static_cast<User>(k)),
                                          sol.coefficients.theta(static_cast<User>(k)));

        const int N = spec_.antennas;
        const auto ft = extract_rank_one(s.W_t.size() ? s.W_t : CMat::Zero(N, N));
        residual = std::max(residual, ft.residual);
        sol.w_t = ft.vector;
        if (multicast(spec_))
            sol.w_r = sol.w_t;
        else
        {
            const auto fr = extract_rank_one(s.W_r.size() ? s.W_r : CMat::Zero(N, N));
            residual = std::max(residual, fr.residual);
            sol.w_r = fr.vector;
        }
        report.rank_residual = residual;
        report.rank_flagged = residual > opt_.rank_tolerance;

        sol.total_power = solution_power(sol);
        sol.achieved_rates = achieved_rates(spec_, channels_, sol);
        bool shortfall = false;
        for (int k = 0; k < 2; ++k)
            shortfall = shortfall || sol.achieved_rates[k] < spec_.rate_targets[k] - 1e-6;
        if (shortfall)
            restore(sol, q, report);
        else
            trim(sol, q);
        return sol;
    }

    // Scale the beamformers down to the tight-QoS powers when that saves power.
    void trim(BeamformingSolution &sol, const std::array<CVec, 2> &q) const
    {
        const std::array<CVec, 2> dirs{unit_or_zero(sol.w_t), unit_or_zero(sol.w_r)};
        const auto p = balance_powers(spec_, H_, q, dirs);
        if (!p)
            return;
        BeamformingSolution cand = sol;
        const double margin = 1.0 + 1e-9;
        cand.w_t = std::sqrt(margin * (*p)[0]) * dirs[0];
        cand.w_r = multicast(spec_) ? cand.w_t : CVec(std::sqrt(margin * (*p)[1]) * dirs[1]);
        cand.total_power = solution_power(cand);
        if (!(cand.total_power < sol.total_power))
            return;
        cand.achieved_rates = achieved_rates(spec_, channels_, cand);
        for (int k = 0; k < 2; ++k)
            if (cand.achieved_rates[k] < spec_.rate_targets[k] - 1e-9)
                return;
        sol = std::move(cand);
    }

    // Power rebalancing along the extracted directions so that both QoS targets hold.
    void restore(BeamformingSolution &sol, const std::array<CVec, 2> &q, SolverReport &report) const
    {
        std::array<CVec, 2> dirs{unit_or_zero(sol.w_t), unit_or_zero(sol.w_r)};
        auto p = balance_powers(spec_, H_, q, dirs);
        if (!p)
        {
            const auto alt = best_directions(spec_, H_, q);
            if (!alt)
            {
                report.message += report.message.empty() ? "" : "; ";
                report.message += "QoS could not be restored along the extracted directions";
                return;
            }
            dirs = alt->first;
            p = alt->second;
        }
        const double margin = 1.0 + 1e-9;
        sol.w_t = std::sqrt(margin * (*p)[0]) * dirs[0];
        sol.w_r = multicast(spec_) ? sol.w_t : CVec(std::sqrt(margin * (*p)[1]) * dirs[1]);
        sol.total_power = solution_power(sol);
        sol.achieved_rates = achieved_rates(spec_, channels_, sol);
        report.feasibility_restored = true;
    }

    struct Polished
    {
        LiftedState state;
        double power = 0.0;
    };

    static SurfaceLayout layout_of(const std::vector<int> &assign)
    {
        SurfaceLayout fixed;
        fixed.mode = AmplitudeMode::Fixed;
        for (std::size_t m = 0; m < assign.size(); ++m)
            fixed.support[assign[m]].push_back(static_cast<int>(m));
        return fixed;
    }

    std::array<CVec, 2> directions_of(const LiftedState &s) const
    {
        std::array<CVec, 2> d{unit_or_zero(extract_rank_one(s.W_t).vector), CVec()};
        d[1] = multicast(spec_) ? d[0] : unit_or_zero(extract_rank_one(s.W_r).vector);
        return d;
    }

    // Cheapest tight-QoS power for binary surface vectors q, trying the given directions first.
    std::optional<std::pair<std::array<CVec, 2>, std::array<double, 2>>>
    cheapest(const std::array<CVec, 2> &q, const std::array<CVec, 2> &dirs) const
    {
        auto best = best_directions(spec_, H_, q);
        const auto p = balance_powers(spec_, H_, q, dirs);
        if (p && (!best || (*p)[0] + (*p)[1] < best->second[0] + best->second[1]))
            best = std::make_pair(dirs, *p);
        return best;
    }

    // Inner loop with the assignment frozen, started from q and tight powers.
    std::optional<Polished> polish_layout(const std::vector<int> &assign, const std::array<CVec, 2> &q,
                                          const std::array<CVec, 2> &dirs, double eta, SolverReport &report)
    {
        const auto tight = cheapest(q, dirs);
        if (!tight)
            return std::nullopt;
        const auto &[d, p] = *tight;
        const double margin = 1.001;
        LiftedState anchor;
        anchor.Q_t = q[0] * q[0].adjoint();
        anchor.Q_r = q[1] * q[1].adjoint();
        anchor.beta_t = anchor.Q_t.diagonal().real();
        anchor.beta_r = anchor.Q_r.diagonal().real();
        const CVec wt = std::sqrt(margin * p[0]) * d[0];
        anchor.W_t = wt * wt.adjoint();
        if (multicast(spec_))
            anchor.W_r = CMat(0, 0);
        else
        {
            const CVec wr = std::sqrt(margin * p[1]) * d[1];
            anchor.W_r = wr * wr.adjoint();
        }
        SolverReport scratch;
        auto inner = inner_loop(layout_of(assign), anchor, eta, 0.0, report.outer_iterations, scratch);
        report.conic_solves += scratch.conic_solves;
        if (!inner.ok || inner.iterations == 0)
            return std::nullopt;
        Polished out;
        out.power = lifted_power(inner.state, spec_);
        out.state = std::move(inner.state);
        return out;
    }

    // Binary surface vectors for an assignment, phases taken from the rank-one factors of s.
    std::array<CVec, 2> binary_vectors(const LiftedState &s, const std::vector<int> &assign) const
    {
        const int M = spec_.elements;
        const double a = std::sqrt(spec_.energy_budget);
        std::array<CVec, 2> q;
        for (int k = 0; k < 2; ++k)
        {
            const CVec f = extract_rank_one(k == T ? s.Q_t : s.Q_r).vector;
            q[k] = CVec::Zero(M);
            for (int m = 0; m < M; ++m)
                if (assign[m] == k)
                    q[k][m] = std::polar(a, std::abs(f[m]) > 0.0 ? std::arg(f[m]) : 0.0);
        }
        return q;
    }

    // Move element m to user k with its phase aligned to the rest of that user's effective channel.
    void move_element(std::array<CVec, 2> &q, int m, int k, const std::array<CVec, 2> &dirs) const
    {
        const CVec Hd = H_[k] * dirs[k];
        const cd rest = q[k].dot(Hd);
        const double ph = std::arg(Hd[m]) - (std::abs(rest) > 0.0 ? std::arg(rest) : 0.0);
        q[1 - k][m] = 0.0;
        q[k][m] = std::polar(std::sqrt(spec_.energy_budget), ph);
    }

    // Round the MS amplitudes to a T/R assignment, re-solve with it frozen, then improve it greedily
    // with single-element flips and T/R swaps ranked by their tight-QoS power.
    bool polish(LiftedState &state, double eta, SolverReport &report)
    {
        const int M = spec_.elements;
        if (M < 2)
            return false;
        std::vector<int> assign(M);
        for (int m = 0; m < M; ++m)
            assign[m] = state.beta_t[m] >= state.beta_r[m] ? T : R;
        for (int k = 0; k < 2; ++k)
            if (std::count(assign.begin(), assign.end(), k) == 0)
            {
                const RVec &b = k == T ? state.beta_t : state.beta_r;
                int best = 0;
                for (int m = 1; m < M; ++m)
                    if (b[m] - (k == T ? state.beta_r : state.beta_t)[m] >
                        b[best] - (k == T ? state.beta_r : state.beta_t)[best])
                        best = m;
                assign[best] = k;
            }

        auto current = polish_layout(assign, binary_vectors(state, assign), directions_of(state), eta, report);
        if (!current)
        {
            report.message += report.message.empty() ? "" : "; ";
            report.message += "mode-switching polish skipped";
            return false;
        }

        for (int step = 0; step < M; ++step)
        {
            const auto dirs = directions_of(current->state);
            const auto q0 = binary_vectors(current->state, assign);
            double best_est = current->power;
            std::optional<std::pair<std::vector<int>, std::array<CVec, 2>>> pick;
            auto consider = [&](const std::vector<int> &a, const std::array<CVec, 2> &q) {
                const auto c = cheapest(q, dirs);
                if (c && c->second[0] + c->second[1] < best_est)
                {
                    best_est = c->second[0] + c->second[1];
                    pick = std::make_pair(a, q);
                }
            };
            const int nt = static_cast<int>(std::count(assign.begin(), assign.end(), T));
            for (int m = 0; m < M; ++m)
            {
                const int from = assign[m], to = 1 - from;
                if ((from == T ? nt : M - nt) <= 1)
                    continue;
                auto a = assign;
                a[m] = to;
                auto q = q0;
                move_element(q, m, to, dirs);
                consider(a, q);
            }
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j)
                    if (assign[i] == T && assign[j] == R)
                    {
                        auto a = assign;
                        a[i] = R;
                        a[j] = T;
                        auto q = q0;
                        move_element(q, i, R, dirs);
                        move_element(q, j, T, dirs);
                        consider(a, q);
                    }
            if (!pick)
                break;
            auto next = polish_layout(pick->first, pick->second, dirs, eta, report);
            if (!next || !(next->power < current->power))
                break;
            assign = pick->first;
            current = std::move(next);
        }

        state = std::move(current->state);
        polished_ = true;
        polished_layout_ = layout_of(assign);
        return true;
    }

    const ProblemSpec &spec_;
    const ChannelSet &channels_;
    PenaltyOptions opt_;
    std::array<CMat, 2> H_;
    double ps_ = 1.0;
    bool polished_ = false;
    SurfaceLayout polished_layout_;
};

} // namespace

PenaltyResult solve_penalty(const ProblemSpec &spec, const ChannelSet &channels, const PenaltyOptions &options,
                            const std::optional<LiftedState> &initial_state)
{
    spec.validate();
    channels.validate(spec);
    options.validate();
    if (spec.protocol == Protocol::TS)
        throw ContractViolation("solve_penalty: time switching is handled by solve_ts");
    if (initial_state)
    {
        const int M = spec.elements, N = spec.antennas;
        if (initial_state->Q_t.rows() != M || initial_state->Q_r.rows() != M || initial_state->W_t.rows() != N)
            throw ContractViolation("solve_penalty: initial state dimensions do not match the problem");
    }
    if (initial_state || options.starts == 1)
    {
        PenaltyRun run(spec, channels, options);
        return run.run(initial_state);
    }

    const auto meets = [&](const PenaltyResult &r) {
        for (int k = 0; k < 2; ++k)
            if (r.solution.achieved_rates[k] < spec.rate_targets[k] - 1e-6)
                return false;
        return true;
    };
    // converged and QoS-feasible first, then QoS-feasible, then anything; lowest power within a class
    const auto rank = [&](const PenaltyResult &r) {
        return r.report.status == SolverStatus::Converged && meets(r) ? 0 : meets(r) ? 1 : 2;
    };
    std::optional<PenaltyResult> best;
    int solves = 0;
    for (int i = 0; i < options.starts; ++i)
    {
        PenaltyOptions o = options;
        o.seed = options.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i);
        std::optional<LiftedState> init;
        if (i == 0)
            init = aligned_point(spec, channels, default_layout(spec));
        PenaltyRun run(spec, channels, o);
        auto r = run.run(init);
        solves += r.report.conic_solves;
        if (!best || rank(r) < rank(*best) ||
            (rank(r) == rank(*best) && r.solution.total_power < best->solution.total_power))
            best = std::move(r);
    }
    best->report.conic_solves = solves;
    return *best;
}

} // namespace starris

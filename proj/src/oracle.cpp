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

#include "starris/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace starris::oracle
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// e[n] = sum_m sqrt(beta_m) exp(j theta_m) conj(v[m]) G[m, n]
CVec effective(const CVec &v, const CMat &G, const std::vector<double> &beta, const std::vector<double> &theta)
{
    const int M = static_cast<int>(G.rows()), N = static_cast<int>(G.cols());
    CVec e = CVec::Zero(N);
    for (int m = 0; m < M; ++m)
    {
        const cd coeff = std::sqrt(beta[m]) * std::polar(1.0, theta[m]) * std::conj(v[m]);
        for (int n = 0; n < N; ++n)
            e[n] += coeff * G(m, n);
    }
    return e;
}

double norm2(const CVec &e)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i)
        s += std::norm(e[i]);
    return s;
}

// All phase vectors with element 0 fixed at zero (the rates ignore a common phase).
std::vector<std::vector<double>> phase_grid(int M, int P)
{
    std::vector<std::vector<double>> out;
    long count = 1;
    for (int m = 1; m < M; ++m)
        count *= P;
    for (long idx = 0; idx < count; ++idx)
    {
        std::vector<double> th(M, 0.0);
        long r = idx;
        for (int m = 1; m < M; ++m)
        {
            th[m] = 2.0 * std::numbers::pi * static_cast<double>(r % P) / P;
            r /= P;
        }
        out.push_back(std::move(th));
    }
    return out;
}

struct AmplitudePair
{
    std::vector<double> t, r;
};

std::vector<AmplitudePair> amplitude_grid(const ProblemSpec &spec, int A)
{
    const int M = spec.elements;
    const double c = spec.energy_budget;
    std::vector<AmplitudePair> out;
    auto push = [&](const std::vector<double> &bt) {
        AmplitudePair p;
        p.t = bt;
        p.r.resize(M);
        for (int m = 0; m < M; ++m)
            p.r[m] = c - bt[m];
        out.push_back(std::move(p));
    };
    switch (spec.protocol)
    {
    case Protocol::ES:
    {
        long count = 1;
        for (int m = 0; m < M; ++m)
            count *= A;
        for (long idx = 0; idx < count; ++idx)
        {
            std::vector<double> bt(M);
            long r = idx;
            for (int m = 0; m < M; ++m)
            {
                bt[m] = c * static_cast<double>(r % A) / (A - 1);
                r /= A;
            }
            push(bt);
        }
        break;
    }
    case Protocol::UES:
        for (int i = 0; i < A; ++i)
            push(std::vector<double>(M, c * static_cast<double>(i) / (A - 1)));
        break;
    case Protocol::MS:
        for (long mask = 0; mask < (1L << M); ++mask)
        {
            std::vector<double> bt(M);
            for (int m = 0; m < M; ++m)
                bt[m] = (mask >> m) & 1 ? c : 0.0;
            push(bt);
        }
        break;
    case Protocol::ConvRis:
    {
        std::vector<double> bt(M, 0.0);
        for (int m = 0; m < M / 2; ++m)
            bt[m] = c;
        push(bt);
        break;
    }
    case Protocol::TS:
        out.push_back({std::vector<double>(M, 1.0), std::vector<double>(M, 1.0)});
        break;
    }
    return out;
}

double ts_power_scalar(double lambda, double rate, double sigma2, double gain)
{
    if (rate == 0.0)
        return 0.0;
    if (lambda <= 0.0 || gain <= 0.0)
        return kInf;
    return lambda * sigma2 * (std::pow(2.0, rate / lambda) - 1.0) / gain;
}

} // namespace

TimeSplit lambda_scan(double g_t, double g_r, double rate_t, double rate_r, double sigma2_t, double sigma2_r,
                      int points)
{
    if (points < 3)
        throw ContractViolation("lambda_scan: need at least three points");
    auto f = [&](double l) {
        return ts_power_scalar(l, rate_t, sigma2_t, g_t) + ts_power_scalar(1.0 - l, rate_r, sigma2_r, g_r);
    };
    TimeSplit best{0.0, f(0.0)};
    int ibest = 0;
    for (int i = 1; i < points; ++i)
    {
        const double l = static_cast<double>(i) / (points - 1);
        const double v = f(l);
        if (v < best.total)
        {
            best = {l, v};
            ibest = i;
        }
    }
    if (!std::isfinite(best.total))
        return best;
    double lo = static_cast<double>(std::max(ibest - 1, 0)) / (points - 1);
    double hi = static_cast<double>(std::min(ibest + 1, points - 1)) / (points - 1);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it)
    {
        const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
        if (f(a) <= f(b))
            hi = b;
        else
            lo = a;
    }
    const double l = 0.5 * (lo + hi);
    if (f(l) < best.total)
        best = {l, f(l)};
    return best;
}

double min_unicast_power(const CVec &e_t, const CVec &e_r, double gamma_t, double gamma_r, double sigma2_t,
                         double sigma2_r)
{
    const int N = static_cast<int>(e_t.size());
    const std::array<double, 2> gamma{gamma_t, gamma_r};
    const std::array<CVec, 2> h{e_t / std::sqrt(sigma2_t), e_r / std::sqrt(sigma2_r)};
    for (int k = 0; k < 2; ++k)
        if (gamma[k] > 0.0 && norm2(h[k]) == 0.0)
            return kInf;
    if (N == 1)
    {
        // p_k |h_k|^2 = gamma_k (p_j |h_k|^2 + 1) for both users
        const double nt = gamma_t > 0.0 ? gamma_t / norm2(h[0]) : 0.0;
        const double nr = gamma_r > 0.0 ? gamma_r / norm2(h[1]) : 0.0;
        const double det = 1.0 - gamma_t * gamma_r;
        if (!(det > 0.0))
            return kInf;
        return ((nt + gamma_t * nr) + (nr + gamma_r * nt)) / det;
    }
    // virtual uplink powers: q_k = gamma_k / ((1 + gamma_k) h_k^H (I + sum_j q_j h_j h_j^H)^{-1} h_k)
    std::array<double, 2> q{0.0, 0.0};
    for (int it = 0; it < 100000; ++it)
    {
        CMat S = CMat::Identity(N, N);
        for (int j = 0; j < 2; ++j)
            S += q[j] * h[j] * h[j].adjoint();
        const auto lu = S.partialPivLu();
        std::array<double, 2> next{0.0, 0.0};
        for (int k = 0; k < 2; ++k)
            if (gamma[k] > 0.0)
            {
                const double x = h[k].dot(lu.solve(h[k])).real();
                next[k] = gamma[k] / ((1.0 + gamma[k]) * x);
            }
        const double change = std::abs(next[0] - q[0]) + std::abs(next[1] - q[1]);
        q = next;
        if (!std::isfinite(q[0] + q[1]) || q[0] + q[1] > 1e30)
            return kInf;
        if (change <= 1e-15 * (q[0] + q[1]))
            return q[0] + q[1];
    }
    return kInf;
}

double min_multicast_power(const CVec &e_t, const CVec &e_r, double gamma_t, double gamma_r, double sigma2_t,
                           double sigma2_r)
{
    const double ct = gamma_t * sigma2_t, cr = gamma_r * sigma2_r; // required |e_k^H w|^2
    const double at = norm2(e_t), ar = norm2(e_r);
    if ((ct > 0.0 && at == 0.0) || (cr > 0.0 && ar == 0.0))
        return kInf;
    if (e_t.size() == 1)
        return std::max(ct > 0.0 ? ct / at : 0.0, cr > 0.0 ? cr / ar : 0.0);
    // e^T w written as sum_n e[n] w[n]; one active constraint first
    double best = kInf;
    auto signal = [](const CVec &e, const CVec &w) {
        cd s = 0.0;
        for (Eigen::Index n = 0; n < e.size(); ++n)
            s += e[n] * w[n];
        return std::norm(s);
    };
    for (int k = 0; k < 2; ++k)
    {
        const CVec &e = k == 0 ? e_t : e_r;
        const double c = k == 0 ? ct : cr, a = k == 0 ? at : ar;
        if (a == 0.0)
            continue;
        const CVec w = std::sqrt(c / a) * e.conjugate() / std::sqrt(a);
        if (signal(e_t, w) >= ct * (1.0 - 1e-12) && signal(e_r, w) >= cr * (1.0 - 1e-12))
            best = std::min(best, c / a);
    }
    if (std::isfinite(best))
        return best;
    // both active: min over the relative phase of c^H Gram^{-1} c
    const cd g12 = e_t.dot(e_r);
    const double det = at * ar - std::norm(g12);
    if (!(det > 1e-14 * at * ar))
        return kInf;
    const double i11 = ar / det, i22 = at / det, i12 = std::abs(g12) / det;
    return ct * i11 + cr * i22 - 2.0 * std::sqrt(ct * cr) * i12;
}

double brute_force_min_power(const ProblemSpec &spec, const ChannelSet &channels, const Grid &grid)
{
    spec.validate();
    channels.validate(spec);
    const int M = spec.elements, N = spec.antennas;
    if (N > 2 || M > 3)
        throw ContractViolation("brute_force_min_power: instance too large to enumerate (N <= 2, M <= 3)");
    if (grid.phase_levels < 1 || grid.phase_levels > 64 || grid.amplitude_levels < 2 || grid.amplitude_levels > 21)
        throw ContractViolation("brute_force_min_power: grid out of range (P <= 64, 2 <= A <= 21)");
    const auto phases = phase_grid(M, grid.phase_levels);
    const auto amps = amplitude_grid(spec, grid.amplitude_levels);
    const bool joint = N == 2 && spec.protocol != Protocol::TS;
    const double work = static_cast<double>(amps.size()) * phases.size() * (joint ? phases.size() : 2.0);
    if (work > 5e7)
        throw ContractViolation("brute_force_min_power: grid too large to enumerate");

    const double gt = std::pow(2.0, spec.rate_targets[0]) - 1.0;
    const double gr = std::pow(2.0, spec.rate_targets[1]) - 1.0;
    const double st = spec.noise_powers[0], sr = spec.noise_powers[1];
    const bool mc = spec.scenario == Scenario::Multicast;

    double best = kInf;
    for (const auto &ap : amps)
    {
        std::vector<CVec> et, er;
        et.reserve(phases.size());
        er.reserve(phases.size());
        for (const auto &th : phases)
        {
            et.push_back(effective(channels.v_t, channels.G, ap.t, th));
            er.push_back(effective(channels.v_r, channels.G, ap.r, th));
        }
        if (spec.protocol == Protocol::TS || N == 1)
        {
            // power only depends on the two gains and falls in each of them
            std::size_t it = 0, ir = 0;
            for (std::size_t i = 1; i < phases.size(); ++i)
            {
                if (norm2(et[i]) > norm2(et[it]))
                    it = i;
                if (norm2(er[i]) > norm2(er[ir]))
                    ir = i;
            }
            double p;
            if (spec.protocol == Protocol::TS)
                p = lambda_scan(norm2(et[it]), norm2(er[ir]), spec.rate_targets[0], spec.rate_targets[1], st, sr,
                                grid.lambda_points)
                        .total;
            else if (mc)
                p = min_multicast_power(et[it], er[ir], gt, gr, st, sr);
            else
                p = min_unicast_power(et[it], er[ir], gt, gr, st, sr);
            best = std::min(best, p);
            continue;
        }
        for (const auto &a : et)
            for (const auto &b : er)
                best = std::min(best, mc ? min_multicast_power(a, b, gt, gr, st, sr)
                                         : min_unicast_power(a, b, gt, gr, st, sr));
    }
    if (!std::isfinite(best))
        throw InfeasibleProblem("brute_force_min_power: no grid point meets the rate targets");
    return best;
}

std::array<double, 2> rate_check(const BeamformingSolution &solution, const ChannelSet &channels,
                                 const ProblemSpec &spec)
{
    const int M = static_cast<int>(channels.G.rows()), N = static_cast<int>(channels.G.cols());
    const auto &c = solution.coefficients;
    auto signal = [&](int k, const CVec &w) {
        const CVec &v = k == 0 ? channels.v_t : channels.v_r;
        const RVec &beta = k == 0 ? c.beta_t : c.beta_r;
        const RVec &theta = k == 0 ? c.theta_t : c.theta_r;
        cd s = 0.0;
        for (int m = 0; m < M; ++m)
        {
            const cd refl = std::sqrt(beta[m]) * std::polar(1.0, theta[m]);
            cd gw = 0.0;
            for (int n = 0; n < N; ++n)
                gw += channels.G(m, n) * w[n];
            s += std::conj(v[m]) * refl * gw;
        }
        return std::norm(s);
    };
    std::array<double, 2> rates{};
    for (int k = 0; k < 2; ++k)
    {
        const double s2 = spec.noise_powers[k];
        const CVec &own = k == 0 ? solution.w_t : solution.w_r;
        const CVec &other = k == 0 ? solution.w_r : solution.w_t;
        if (solution.protocol == Protocol::TS)
        {
            const double l = k == 0 ? c.lambda_t : c.lambda_r;
            rates[k] = l > 0.0 ? l * std::log2(1.0 + signal(k, own) / (l * s2)) : 0.0;
        }
        else if (solution.scenario == Scenario::Multicast)
        {
            rates[k] = std::log2(1.0 + signal(k, solution.w_t) / s2);
        }
        else
        {
            rates[k] = std::log2(1.0 + signal(k, own) / (signal(k, other) + s2));
        }
    }
    return rates;
}

} // namespace starris::oracle

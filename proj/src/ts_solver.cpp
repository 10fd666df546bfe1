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

#include "starris/ts_solver.hpp"
#include "starris/conic.hpp"
#include "starris/linalg.hpp"
#include "starris/surrogates.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

namespace starris
{

void TsOptions::validate() const
{
    if (randomizations < 0 || refinement_sweeps < 0)
        throw ContractViolation("TsOptions: counts must be nonnegative");
    if (!(lambda_margin > 0.0) || !(lambda_margin < 0.5))
        throw ContractViolation("TsOptions: lambda_margin must lie in (0, 0.5)");
    if (!(solver_tolerance > 0.0))
        throw ContractViolation("TsOptions: solver_tolerance must be positive");
}

namespace
{

CVec unimodular(const CVec &v)
{
    CVec q(v.size());
    for (Eigen::Index m = 0; m < v.size(); ++m)
        q[m] = std::abs(v[m]) > 0.0 ? v[m] / std::abs(v[m]) : cd(1.0, 0.0);
    return q;
}

double gain_of(const CMat &Rm, const CVec &q)
{
    return q.dot(Rm * q).real();
}

// Coordinate ascent: each phase aligned with the field of the others, which never lowers the gain.
void refine(const CMat &Rm, CVec &q, int sweeps)
{
    const int M = static_cast<int>(q.size());
    double g = gain_of(Rm, q);
    for (int s = 0; s < sweeps; ++s)
    {
        for (int m = 0; m < M; ++m)
        {
            const cd f = (Rm.row(m) * q)(0) - Rm(m, m) * q[m];
            if (std::abs(f) > 0.0)
                q[m] = f / std::abs(f);
        }
        const double gn = gain_of(Rm, q);
        if (gn <= g * (1.0 + 1e-14))
        {
            g = std::max(g, gn);
            break;
        }
        g = gn;
    }
}

} // namespace

PhaseResult optimize_phase_vector(const CMat &H, const TsOptions &options)
{
    options.validate();
    const int M = static_cast<int>(H.rows());
    if (M < 1)
        throw ContractViolation("optimize_phase_vector: empty channel");
    const CMat Rm = H * H.adjoint();
    const double scale = Rm.trace().real();
    PhaseResult out;
    if (!(scale > 0.0))
    {
        out.q = CVec::Ones(M);
        return out;
    }
    if (M == 1)
    {
        out.q = CVec::Ones(1);
        out.gain = out.relaxation_bound = out.eigen_candidate_gain = gain_of(Rm, out.q);
        return out;
    }

    // max Tr(R V) s.t. diag(V) = 1, V psd, on R normalized to unit trace
    conic::ConicProgram prog;
    const auto V = prog.add_hermitian_psd(M, "V");
    prog.add_objective(conic::AffineScalar::inner(V, Rm / scale), -1.0);
    for (int m = 0; m < M; ++m)
        prog.add_equality(conic::AffineScalar::diag_entry(V, m) - conic::AffineScalar(1.0), "unit");
    conic::SolverSettings st;
    st.tolerance = options.solver_tolerance;
    const auto res = conic::solve(prog, st);

    CMat Vs = CMat::Identity(M, M);
    if (res.status == conic::ConicStatus::Optimal)
    {
        Vs = linalg::hermitian_part(res.value(V));
        out.relaxation_bound = -res.objective * scale;
    }
    else
    {
        out.relaxation_bound = M * linalg::eigenvalues(Rm)[M - 1];
    }

    const auto top = principal_eigenpair(Vs);
    CVec best = unimodular(top.vector);
    double best_gain = gain_of(Rm, best);
    out.eigen_candidate_gain = best_gain;

    Eigen::SelfAdjointEigenSolver<CMat> es(Vs);
    const CMat factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::mt19937_64 rng(options.seed);
    for (int r = 0; r < options.randomizations; ++r)
    {
        const CVec cand = unimodular(factor * linalg::crandn(M, rng));
        const double g = gain_of(Rm, cand);
        if (g > best_gain)
        {
            best_gain = g;
            best = cand;
        }
    }
    refine(Rm, best, options.refinement_sweeps);
    out.gain = gain_of(Rm, best);
    out.q = best;
    return out;
}

CVec mrt_beamformer(const CVec &q, const CMat &H, double power)
{
    if (q.size() != H.rows())
        throw ContractViolation("mrt_beamformer: q and H disagree");
    if (power < 0.0)
        throw ContractViolation("mrt_beamformer: negative power");
    if (power == 0.0)
        return CVec::Zero(H.cols());
    const CVec h = H.adjoint() * q;
    const double n = h.norm();
    if (!(n > 0.0))
        throw InfeasibleProblem("mrt_beamformer: zero effective channel");
    return std::sqrt(power) * h / n;
}

double ts_power(double lambda, double rate, double sigma2, double gain)
{
    if (rate == 0.0)
        return 0.0;
    if (!(lambda > 0.0))
        return std::numeric_limits<double>::infinity();
    return lambda * sigma2 * std::expm1(rate * std::numbers::ln2 / lambda) / gain;
}

TimePowerAllocation allocate_time_power(double g_t, double g_r, double rate_t, double rate_r, double sigma2_t,
                                        double sigma2_r, double margin)
{
    if (rate_t < 0.0 || rate_r < 0.0 || !(sigma2_t > 0.0) || !(sigma2_r > 0.0) || g_t < 0.0 || g_r < 0.0)
        throw ContractViolation("allocate_time_power: invalid arguments");
    if ((rate_t > 0.0 && !(g_t > 0.0)) || (rate_r > 0.0 && !(g_r > 0.0)))
        throw InfeasibleProblem("allocate_time_power: positive rate target over a zero-gain channel");
    TimePowerAllocation a;
    if (rate_t == 0.0 || rate_r == 0.0)
    {
        a.lambda_t = rate_r == 0.0 ? 1.0 : 0.0;
        if (rate_t == 0.0 && rate_r == 0.0)
            a.lambda_t = 0.5;
        a.lambda_r = 1.0 - a.lambda_t;
        a.p_t = ts_power(a.lambda_t, rate_t, sigma2_t, g_t);
        a.p_r = ts_power(a.lambda_r, rate_r, sigma2_r, g_r);
        return a;
    }
    auto f = [&](double l) { return ts_power(l, rate_t, sigma2_t, g_t) + ts_power(1.0 - l, rate_r, sigma2_r, g_r); };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = margin, hi = 1.0 - margin;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-13)
    {
        if (f1 <= f2)
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        }
        else
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        }
    }
    a.lambda_t = 0.5 * (lo + hi);
    a.lambda_r = 1.0 - a.lambda_t;
    a.p_t = ts_power(a.lambda_t, rate_t, sigma2_t, g_t);
    a.p_r = ts_power(a.lambda_r, rate_r, sigma2_r, g_r);
    return a;
}

TsResult solve_ts(const ProblemSpec &spec, const ChannelSet &channels, const TsOptions &options)
{
    spec.validate();
    channels.validate(spec);
    options.validate();
    if (spec.protocol != Protocol::TS)
        throw ContractViolation("solve_ts: protocol must be TS");

    TsResult out;
    const std::array<CMat, 2> H{cascade_channel(channels.v_t, channels.G), cascade_channel(channels.v_r, channels.G)};
    const int M = spec.elements;
    for (int k = 0; k < 2; ++k)
    {
        TsOptions o = options;
        o.seed = options.seed + static_cast<std::uint64_t>(k) * 0x9e3779b97f4a7c15ULL;
        out.phases[k] = optimize_phase_vector(H[k], o);
        out.report.conic_solves += M > 1 ? 1 : 0;
    }

    auto &sol = out.solution;
    sol.protocol = Protocol::TS;
    sol.scenario = spec.scenario;
    try
    {
        out.allocation = allocate_time_power(out.phases[T].gain, out.phases[R].gain, spec.rate_targets[T],
                                             spec.rate_targets[R], spec.noise_powers[T], spec.noise_powers[R],
                                             options.lambda_margin);
    }
    catch (const InfeasibleProblem &e)
    {
        out.report.status = SolverStatus::Infeasible;
        out.report.message = e.what();
        sol.w_t = CVec::Zero(spec.antennas);
        sol.w_r = CVec::Zero(spec.antennas);
        return out;
    }

    auto &c = sol.coefficients;
    c.lambda_t = out.allocation.lambda_t;
    c.lambda_r = out.allocation.lambda_r;
    for (int k = 0; k < 2; ++k)
    {
        const User u = static_cast<User>(k);
        StarCoefficients::from_vector(out.phases[k].q, c.beta(u), c.theta(u));
        c.beta(u) = RVec::Ones(M);
    }
    sol.w_t = out.allocation.p_t > 0.0 ? mrt_beamformer(out.phases[T].q, H[T], out.allocation.p_t)
                                       : CVec::Zero(spec.antennas);
    sol.w_r = out.allocation.p_r > 0.0 ? mrt_beamformer(out.phases[R].q, H[R], out.allocation.p_r)
                                       : CVec::Zero(spec.antennas);
    sol.total_power = solution_power(sol);
    sol.achieved_rates = achieved_rates(spec, channels, sol);
    out.report.status = SolverStatus::Converged;
    out.report.outer_iterations = 1;
    out.report.objective_trace.push_back(sol.total_power);
    return out;
}

} // namespace starris

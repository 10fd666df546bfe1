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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace starris
{

std::string_view to_string(Protocol p)
{
    switch (p)
    {
    case Protocol::ES:
        return "ES";
    case Protocol::MS:
        return "MS";
    case Protocol::TS:
        return "TS";
    case Protocol::ConvRis:
        return "CONV_RIS";
    case Protocol::UES:
        return "UES";
    }
    return "?";
}

std::string_view to_string(Scenario s)
{
    return s == Scenario::Unicast ? "unicast" : "multicast";
}

Protocol protocol_from_string(std::string_view name)
{
    for (auto p : {Protocol::ES, Protocol::MS, Protocol::TS, Protocol::ConvRis, Protocol::UES})
        if (to_string(p) == name)
            return p;
    throw ContractViolation("unknown protocol '" + std::string(name) + "'");
}

Scenario scenario_from_string(std::string_view name)
{
    if (name == "unicast")
        return Scenario::Unicast;
    if (name == "multicast")
        return Scenario::Multicast;
    throw ContractViolation("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(SolverStatus s)
{
    switch (s)
    {
    case SolverStatus::Converged:
        return "CONVERGED";
    case SolverStatus::MaxIter:
        return "MAX_ITER";
    case SolverStatus::Infeasible:
        return "INFEASIBLE";
    case SolverStatus::SolverFailure:
        return "SOLVER_FAILURE";
    }
    return "?";
}

void ProblemSpec::validate() const
{
    if (antennas < 1)
        throw ContractViolation("antenna count must be >= 1");
    if (elements < 1)
        throw ContractViolation("element count must be >= 1");
    for (int k = 0; k < 2; ++k)
    {
        if (!(rate_targets[k] >= 0.0) || !std::isfinite(rate_targets[k]))
            throw ContractViolation("rate targets must be finite and >= 0");
        if (!(noise_powers[k] > 0.0) || !std::isfinite(noise_powers[k]))
            throw ContractViolation("noise powers must be finite and > 0");
    }
    if (protocol == Protocol::ConvRis && elements % 2 != 0)
        throw ContractViolation("conventional RIS baseline needs an even element count");
    if (!(energy_budget > 0.0 && energy_budget <= 1.0))
        throw ContractViolation("energy budget must lie in (0, 1]");
}

double ProblemSpec::sinr_target(User k) const
{
    return std::exp2(rate_targets[k]) - 1.0;
}

ProblemSpec make_problem(int antennas, int elements, Protocol protocol, Scenario scenario, double sinr_db,
                         double noise_w)
{
    ProblemSpec spec;
    spec.antennas = antennas;
    spec.elements = elements;
    spec.protocol = protocol;
    spec.scenario = scenario;
    const double rate = std::log2(1.0 + db_to_linear(sinr_db));
    spec.rate_targets = {rate, rate};
    spec.noise_powers = {noise_w, noise_w};
    return spec;
}

void ChannelSet::validate(const ProblemSpec &spec) const
{
    if (G.rows() != spec.elements || G.cols() != spec.antennas)
        throw ContractViolation("G must be M x N");
    if (v_t.size() != spec.elements || v_r.size() != spec.elements)
        throw ContractViolation("v_t and v_r must have M entries");
    if (!G.allFinite() || !v_t.allFinite() || !v_r.allFinite())
        throw ContractViolation("channel entries must be finite");
}

CVec StarCoefficients::coefficient_vector(User k) const
{
    const RVec &b = beta(k);
    const RVec &th = theta(k);
    CVec q(b.size());
    for (Eigen::Index m = 0; m < b.size(); ++m)
        q[m] = std::polar(std::sqrt(std::max(b[m], 0.0)), -th[m]);
    return q;
}

void StarCoefficients::from_vector(const CVec &q, RVec &beta, RVec &theta)
{
    beta.resize(q.size());
    theta.resize(q.size());
    for (Eigen::Index m = 0; m < q.size(); ++m)
    {
        beta[m] = std::norm(q[m]);
        double th = beta[m] > 0.0 ? -std::arg(q[m]) : 0.0;
        th = std::fmod(th, 2.0 * std::numbers::pi);
        if (th < 0.0)
            th += 2.0 * std::numbers::pi;
        if (th >= 2.0 * std::numbers::pi)
            th = 0.0;
        theta[m] = th;
    }
}

bool BeamformingSolution::shares_beamformer() const
{
    return scenario == Scenario::Multicast && protocol != Protocol::TS;
}

CMat cascade_channel(const CVec &v_k, const CMat &G)
{
    if (v_k.size() != G.rows())
        throw ContractViolation("cascade_channel: v_k has " + std::to_string(v_k.size()) + " entries but G has " +
                                std::to_string(G.rows()) + " rows");
    return v_k.conjugate().asDiagonal() * G;
}

namespace
{
double effective_power(const CMat &H_k, const CVec &q_k, const CVec &w)
{
    if (q_k.size() != H_k.rows() || w.size() != H_k.cols())
        throw ContractViolation("rate: dimension mismatch between H_k, q_k and w");
    return std::norm(q_k.dot(H_k * w)); // Eigen's dot conjugates the left operand
}
} // namespace

double unicast_rate(const CMat &H_k, const CVec &q_k, const CVec &w_k, const CVec &w_kbar, double sigma2)
{
    if (!(sigma2 > 0.0))
        throw std::domain_error("unicast_rate: noise power must be > 0");
    const double signal = effective_power(H_k, q_k, w_k);
    const double interference = w_kbar.size() == 0 ? 0.0 : effective_power(H_k, q_k, w_kbar);
    return std::log2(1.0 + signal / (interference + sigma2));
}

double ts_rate(const CMat &H_k, const CVec &q_k, const CVec &w_k, double sigma2, double lambda)
{
    if (!(sigma2 > 0.0))
        throw std::domain_error("ts_rate: noise power must be > 0");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::domain_error("ts_rate: time share must lie in [0, 1]");
    if (lambda == 0.0)
        return 0.0;
    const double signal = effective_power(H_k, q_k, w_k);
    return lambda * std::log2(1.0 + signal / (lambda * sigma2));
}

double multicast_rate(const CMat &H_t, const CMat &H_r, const CVec &q_t, const CVec &q_r, const CVec &w_c,
                      double sigma2_t, double sigma2_r)
{
    if (!(sigma2_t > 0.0) || !(sigma2_r > 0.0))
        throw std::domain_error("multicast_rate: noise power must be > 0");
    const double rt = std::log2(1.0 + effective_power(H_t, q_t, w_c) / sigma2_t);
    const double rr = std::log2(1.0 + effective_power(H_r, q_r, w_c) / sigma2_r);
    return std::min(rt, rr);
}

std::array<double, 2> achieved_rates(const ProblemSpec &spec, const ChannelSet &channels,
                                     const BeamformingSolution &solution)
{
    std::array<double, 2> rates{};
    for (User k : {T, R})
    {
        const CMat H = cascade_channel(channels.v(k), channels.G);
        const CVec q = solution.coefficients.coefficient_vector(k);
        const CVec &w = k == T ? solution.w_t : solution.w_r;
        if (solution.protocol == Protocol::TS)
        {
            rates[k] = ts_rate(H, q, w, spec.noise_powers[k], solution.coefficients.lambda(k));
        }
        else if (solution.scenario == Scenario::Multicast)
        {
            rates[k] = unicast_rate(H, q, solution.w_t, CVec(), spec.noise_powers[k]);
        }
        else
        {
            const CVec &wbar = k == T ? solution.w_r : solution.w_t;
            rates[k] = unicast_rate(H, q, w, wbar, spec.noise_powers[k]);
        }
    }
    return rates;
}

double solution_power(const BeamformingSolution &solution)
{
    if (solution.shares_beamformer())
        return solution.w_t.squaredNorm();
    return solution.w_t.squaredNorm() + solution.w_r.squaredNorm();
}

std::string_view to_string(ViolationKind k)
{
    switch (k)
    {
    case ViolationKind::EnergySum:
        return "energy sum";
    case ViolationKind::AmplitudeRange:
        return "amplitude out of range";
    case ViolationKind::NonBinary:
        return "non-binary amplitude";
    case ViolationKind::NotUnimodular:
        return "non-unit amplitude";
    case ViolationKind::TimeSimplex:
        return "time shares do not sum to one";
    case ViolationKind::TimeRange:
        return "time share out of range";
    case ViolationKind::NotUniform:
        return "non-uniform amplitude";
    case ViolationKind::PhaseRange:
        return "phase out of range";
    }
    return "?";
}

double ValidationReport::max_violation() const
{
    double worst = 0.0;
    for (const auto &v : violations)
        worst = std::max(worst, v.magnitude);
    return worst;
}

double ValidationReport::max_violation(ViolationKind kind) const
{
    double worst = 0.0;
    for (const auto &v : violations)
        if (v.kind == kind)
            worst = std::max(worst, v.magnitude);
    return worst;
}

int ValidationReport::count(ViolationKind kind) const
{
    return static_cast<int>(std::count_if(violations.begin(), violations.end(),
                                          [kind](const Violation &v) { return v.kind == kind; }));
}

ValidationReport validate_coefficients(Protocol protocol, const StarCoefficients &coeffs, double tol,
                                       double energy_budget)
{
    ValidationReport report;
    auto flag = [&](ViolationKind kind, int user, int element, double magnitude) {
        if (magnitude > tol)
            report.violations.push_back({kind, user, element, magnitude});
    };

    const int M = coeffs.size();
    if (coeffs.beta_r.size() != M || coeffs.theta_t.size() != M || coeffs.theta_r.size() != M)
    {
        report.violations.push_back({ViolationKind::EnergySum, -1, -1, std::numeric_limits<double>::infinity()});
        return report;
    }

    for (User k : {T, R})
        for (int m = 0; m < M; ++m)
        {
            const double b = coeffs.beta(k)[m];
            flag(ViolationKind::AmplitudeRange, k, m, std::max({0.0, -b, b - 1.0}));
            const double th = coeffs.theta(k)[m];
            flag(ViolationKind::PhaseRange, k, m, std::max({0.0, -th, th - 2.0 * std::numbers::pi}));
        }

    if (protocol == Protocol::TS)
    {
        // every element is fully on in its own period
        for (User k : {T, R})
            for (int m = 0; m < M; ++m)
                flag(ViolationKind::NotUnimodular, k, m, std::abs(coeffs.beta(k)[m] - 1.0));
        flag(ViolationKind::TimeSimplex, -1, -1, std::abs(coeffs.lambda_t + coeffs.lambda_r - 1.0));
        for (User k : {T, R})
            flag(ViolationKind::TimeRange, k, -1, std::max({0.0, -coeffs.lambda(k), coeffs.lambda(k) - 1.0}));
        return report;
    }

    for (int m = 0; m < M; ++m)
        flag(ViolationKind::EnergySum, -1, m, std::abs(coeffs.beta_t[m] + coeffs.beta_r[m] - energy_budget));

    if (protocol == Protocol::MS || protocol == Protocol::ConvRis)
        for (User k : {T, R})
            for (int m = 0; m < M; ++m)
            {
                const double b = coeffs.beta(k)[m];
                flag(ViolationKind::NonBinary, k, m, std::abs(b - b * b));
            }

    if (protocol == Protocol::UES)
        for (User k : {T, R})
            for (int m = 1; m < M; ++m)
                flag(ViolationKind::NotUniform, k, m, std::abs(coeffs.beta(k)[m] - coeffs.beta(k)[0]));

    return report;
}

double watts_to_dbm(double watts)
{
    return 10.0 * std::log10(watts) + 30.0;
}

double dbm_to_watts(double dbm)
{
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

double linear_to_db(double lin)
{
    return 10.0 * std::log10(lin);
}

} // namespace starris

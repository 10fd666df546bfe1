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

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace starris
{

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Broken precondition of a library call (dimension mismatch, bad parameter, ...)
class ContractViolation : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Problem instance has no feasible point (e.g. a QoS target with zero channel gain)
class InfeasibleProblem : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class Protocol
{
    ES,      // energy splitting
    MS,      // mode switching
    TS,      // time switching
    ConvRis, // reflect-only + transmit-only surfaces, M/2 elements each
    UES      // energy splitting with one shared amplitude split
};

enum class Scenario
{
    Unicast,
    Multicast
};

// Index of the T user (transmission side) and R user (reflection side).
enum User : int
{
    T = 0,
    R = 1
};

constexpr User other(User k) { return k == T ? R : T; }

std::string_view to_string(Protocol p);
std::string_view to_string(Scenario s);
Protocol protocol_from_string(std::string_view name);
Scenario scenario_from_string(std::string_view name);

struct ProblemSpec
{
    int antennas = 2;  // N
    int elements = 10; // M
    Protocol protocol = Protocol::ES;
    Scenario scenario = Scenario::Unicast;
    std::array<double, 2> rate_targets{1.0, 1.0}; // bits/s/Hz; multicast uses R_c in both slots
    std::array<double, 2> noise_powers{1e-12, 1e-12}; // W
    double energy_budget = 1.0; // beta^t + beta^r; < 1 models a lossy element

    // Throws ContractViolation on a malformed instance.
    void validate() const;

    // Minimum SINR 2^R - 1, derived on demand from the rate target.
    double sinr_target(User k) const;
};

// Convenience constructor: both users share one rate target given as an SINR in dB.
ProblemSpec make_problem(int antennas, int elements, Protocol protocol, Scenario scenario,
                         double sinr_db, double noise_w = 1e-12);

struct ChannelSet
{
    CMat G;   // BS -> surface, M x N
    CVec v_t; // surface -> T user, M
    CVec v_r; // surface -> R user, M

    const CVec &v(User k) const { return k == T ? v_t : v_r; }

    // Throws ContractViolation when shapes disagree with spec or entries are not finite.
    void validate(const ProblemSpec &spec) const;
};

struct StarCoefficients
{
    RVec beta_t, beta_r;   // energy fractions per element
    RVec theta_t, theta_r; // phases in [0, 2pi)
    double lambda_t = 1.0; // time shares, only meaningful for TS
    double lambda_r = 1.0;

    int size() const { return static_cast<int>(beta_t.size()); }
    const RVec &beta(User k) const { return k == T ? beta_t : beta_r; }
    RVec &beta(User k) { return k == T ? beta_t : beta_r; }
    const RVec &theta(User k) const { return k == T ? theta_t : theta_r; }
    RVec &theta(User k) { return k == T ? theta_t : theta_r; }
    double lambda(User k) const { return k == T ? lambda_t : lambda_r; }

    // q_k with q_k[m] = sqrt(beta_m) exp(-j theta_m), so that q_k^H H_k w = v_k^H Theta_k G w.
    CVec coefficient_vector(User k) const;

    // Inverse of coefficient_vector: amplitudes |q|^2 and phases -arg(q) wrapped to [0, 2pi).
    static void from_vector(const CVec &q, RVec &beta, RVec &theta);
};

// Lifted (rank-relaxed) variables of the ES/MS problems.
struct LiftedState
{
    CMat Q_t, Q_r; // M x M
    CMat W_t, W_r; // N x N (multicast: W_t holds W_c, W_r is empty)
    RVec beta_t, beta_r;
};

struct BeamformingSolution
{
    Protocol protocol = Protocol::ES;
    Scenario scenario = Scenario::Unicast;
    CVec w_t, w_r; // multicast ES/MS stores w_c in both slots
    StarCoefficients coefficients;
    double total_power = 0.0;               // W
    std::array<double, 2> achieved_rates{}; // bits/s/Hz per user

    // True when both users share a single beamformer (ES/MS-style multicast).
    bool shares_beamformer() const;
};

enum class SolverStatus
{
    Converged,
    MaxIter,
    Infeasible,
    SolverFailure
};

std::string_view to_string(SolverStatus s);

struct TraceRecord
{
    int outer = 0;
    int inner = 0;
    double power = 0.0;               // W
    double penalized_objective = 0.0; // W
    double violation = 0.0;           // max equality violation after this inner step
};

struct SolverReport
{
    SolverStatus status = SolverStatus::Converged;
    int outer_iterations = 0;
    std::vector<int> inner_iterations_per_outer;
    std::vector<double> objective_trace;            // power in W, one per inner iteration
    std::vector<double> penalized_objective_trace;  // relaxed-subproblem optimum, one per inner iteration
    std::vector<double> violation_trace;            // one per outer iteration
    std::vector<TraceRecord> records;
    int failed_outer = -1;          // outer index of an infeasible / failed subproblem
    double rank_residual = 0.0;     // worst lambda_2 / lambda_1 over emitted lifted matrices
    bool rank_flagged = false;      // rank residual above tolerance at termination
    bool feasibility_restored = false;
    double binary_violation = 0.0;  // MS: max(beta - beta^2) before rounding
    int conic_solves = 0;
    std::string message;
};

// H_k = diag(v_k^H) G: row m of G scaled by conj(v_k[m]).
CMat cascade_channel(const CVec &v_k, const CMat &G);

// log2(1 + |q^H H w_k|^2 / (|q^H H w_kbar|^2 + sigma2)).
double unicast_rate(const CMat &H_k, const CVec &q_k, const CVec &w_k, const CVec &w_kbar, double sigma2);

// lambda log2(1 + |q^H H w|^2 / (lambda sigma2)); lambda = 0 gives the limit 0.
double ts_rate(const CMat &H_k, const CVec &q_k, const CVec &w_k, double sigma2, double lambda);

// min_k log2(1 + |q_k^H H_k w_c|^2 / sigma2_k).
double multicast_rate(const CMat &H_t, const CMat &H_r, const CVec &q_t, const CVec &q_r, const CVec &w_c,
                      double sigma2_t, double sigma2_r);

// Per-user rates of a solution under the protocol/scenario it was produced for.
std::array<double, 2> achieved_rates(const ProblemSpec &spec, const ChannelSet &channels,
                                     const BeamformingSolution &solution);

// Sum of beamformer powers (shared beamformer counted once).
double solution_power(const BeamformingSolution &solution);

enum class ViolationKind
{
    EnergySum,      // |beta^t + beta^r - c|
    AmplitudeRange, // beta outside [0, 1]
    NonBinary,      // beta - beta^2 for MS / conventional RIS
    NotUnimodular,  // |beta - 1| for TS
    TimeSimplex,    // |lambda^t + lambda^r - 1|
    TimeRange,      // lambda outside [0, 1]
    NotUniform,     // UES: |beta_m^t - beta_1^t|
    PhaseRange      // theta outside [0, 2pi)
};

std::string_view to_string(ViolationKind k);

struct Violation
{
    ViolationKind kind;
    int user = -1;    // -1 when not user specific
    int element = -1; // -1 when not element specific
    double magnitude = 0.0;
};

struct ValidationReport
{
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    double max_violation() const;
    double max_violation(ViolationKind kind) const;
    int count(ViolationKind kind) const;
};

// Checks the per-protocol feasible set of the coefficients. Never throws on infeasible input.
ValidationReport validate_coefficients(Protocol protocol, const StarCoefficients &coeffs, double tol,
                                       double energy_budget = 1.0);

double watts_to_dbm(double watts);
double dbm_to_watts(double dbm);
double db_to_linear(double db);
double linear_to_db(double lin);

} // namespace starris

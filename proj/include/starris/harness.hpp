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

// Monte Carlo sweeps over M, N or the SINR target, with figure-ready CSV output and a
// JSON manifest that reproduces the run.

#include "starris/baselines.hpp"
#include "starris/channel_gen.hpp"
#include "starris/core_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace starris::harness
{

inline constexpr int kSchemaVersion = 1;
inline constexpr const char *kLibraryVersion = "starris 0.1.0";

enum class SweepVariable
{
    Elements, // M
    Antennas, // N
    SinrDb    // common SINR target in dB
};

std::string_view to_string(SweepVariable v);
SweepVariable sweep_variable_from_string(std::string_view name); // "M", "N" or "sinr_db"

struct ExperimentConfig
{
    SweepVariable sweep = SweepVariable::Elements;
    std::vector<double> values{6, 8, 10};
    int antennas = 2;
    int elements = 10;
    double sinr_db = 0.0;
    double noise_dbm = -90.0;
    double energy_budget = 1.0;
    Scenario scenario = Scenario::Unicast;
    std::vector<Protocol> protocols{Protocol::ES, Protocol::MS, Protocol::TS, Protocol::ConvRis, Protocol::UES};
    int realizations = 20;
    std::uint64_t seed = 1;
    int threads = 0; // 0: one per hardware thread
    bool trace = false;
    std::string output = "results";
    GeometryConfig geometry;
    FadingConfig fading;
    SchemeOptions options;

    // Throws ContractViolation: empty or unsorted sweep, realizations < 1, bad sub-configs.
    void validate() const;
    // Problem instance at one sweep value.
    ProblemSpec problem(double sweep_value, Protocol protocol) const;
};

// JSON text round trip; unknown keys and a wrong schema_version are rejected with ContractViolation.
ExperimentConfig config_from_json(const std::string &text);
std::string config_to_json(const ExperimentConfig &config);
ExperimentConfig load_config(const std::filesystem::path &path);

// Realization seed from (base seed, realization index, sweep value), independent of the other sweep points.
std::uint64_t realization_seed(std::uint64_t base, int realization, double sweep_value);

struct RunRecord
{
    double sweep_value = 0.0;
    Protocol protocol = Protocol::ES;
    int realization = 0;
    std::uint64_t seed = 0;
    SolverStatus status = SolverStatus::Converged;
    bool ok = false; // finite power and both rate targets met
    double power_w = 0.0;
    int outer_iterations = 0;
    int conic_solves = 0;
    std::string error;
};

struct ResultRow
{
    double sweep_value = 0.0;
    Protocol protocol = Protocol::ES;
    Scenario scenario = Scenario::Unicast;
    double mean_power_dbm = 0.0; // dBm of the mean power in W over successful runs
    double stderr_dbm = 0.0;     // first-order propagation of the standard error of that mean
    int n_ok = 0;
    int n_fail = 0;
    double mean_iterations = 0.0;
};

struct ExperimentResults
{
    ExperimentConfig config;
    std::vector<ResultRow> rows;  // sweep value major, protocols in config order
    std::vector<RunRecord> runs;  // same order, realizations innermost
};

// Solves one realization; exceptions become a failed record.
RunRecord run_single(const ExperimentConfig &config, double sweep_value, Protocol protocol, int realization);

ExperimentResults run_experiment(const ExperimentConfig &config);

// Aggregates the records of one (sweep value, protocol) cell.
ResultRow aggregate(const std::vector<RunRecord> &runs, double sweep_value, Protocol protocol, Scenario scenario);

// Writes results.csv, runs.csv and manifest.json into dir (created if missing).
void emit_figure_data(const ExperimentResults &results, const std::filesystem::path &dir);

std::string results_csv(const std::vector<ResultRow> &rows);
std::vector<ResultRow> parse_results_csv(const std::string &text);

// Solves one ES/MS instance and writes one row per outer iteration (outer, inner_iterations,
// power_w, penalized_objective, violation) to path.
SolverReport run_convergence_trace(const ProblemSpec &spec, const ChannelSet &channels,
                                   const PenaltyOptions &options, const std::filesystem::path &path);

// Convergence traces of realization 0 for every ES/MS entry of the sweep, written to dir/traces.
void emit_traces(const ExperimentConfig &config, const std::filesystem::path &dir);

} // namespace starris::harness

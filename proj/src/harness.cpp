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

#include "starris/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace starris::harness
{

using json = nlohmann::json;

std::string_view to_string(SweepVariable v)
{
    switch (v)
    {
    case SweepVariable::Elements:
        return "M";
    case SweepVariable::Antennas:
        return "N";
    case SweepVariable::SinrDb:
        return "sinr_db";
    }
    return "?";
}

SweepVariable sweep_variable_from_string(std::string_view name)
{
    if (name == "M" || name == "elements")
        return SweepVariable::Elements;
    if (name == "N" || name == "antennas")
        return SweepVariable::Antennas;
    if (name == "sinr_db" || name == "sinr")
        return SweepVariable::SinrDb;
    throw ContractViolation("unknown sweep variable: " + std::string(name));
}

namespace
{

bool is_count(double v)
{
    return v >= 1.0 && v == std::floor(v) && v < 1e6;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (values.empty())
        throw ContractViolation("sweep values must not be empty");
    if (!std::is_sorted(values.begin(), values.end()) ||
        std::adjacent_find(values.begin(), values.end()) != values.end())
        throw ContractViolation("sweep values must be strictly increasing");
    for (double v : values)
    {
        if (!std::isfinite(v))
            throw ContractViolation("sweep values must be finite");
        if (sweep != SweepVariable::SinrDb && !is_count(v))
            throw ContractViolation("M / N sweep values must be positive integers");
    }
    if (realizations < 1)
        throw ContractViolation("realization count must be >= 1");
    if (protocols.empty())
        throw ContractViolation("at least one protocol is required");
    if (antennas < 1 || elements < 1)
        throw ContractViolation("antennas and elements must be >= 1");
    if (threads < 0)
        throw ContractViolation("threads must be >= 0");
    if (!std::isfinite(noise_dbm) || !std::isfinite(sinr_db))
        throw ContractViolation("noise and SINR must be finite");
    fading.validate();
    options.penalty.validate();
    options.ts.validate();
}

ProblemSpec ExperimentConfig::problem(double sweep_value, Protocol protocol) const
{
    int n = antennas, m = elements;
    double db = sinr_db;
    switch (sweep)
    {
    case SweepVariable::Elements:
        m = static_cast<int>(sweep_value);
        break;
    case SweepVariable::Antennas:
        n = static_cast<int>(sweep_value);
        break;
    case SweepVariable::SinrDb:
        db = sweep_value;
        break;
    }
    ProblemSpec spec = make_problem(n, m, protocol, scenario, db, dbm_to_watts(noise_dbm));
    spec.energy_budget = energy_budget;
    return spec;
}

// ---- JSON ------------------------------------------------------------------------------------

namespace
{

void check_keys(const json &obj, const char *where, std::initializer_list<const char *> allowed)
{
    if (!obj.is_object())
        throw ContractViolation(std::string(where) + ": expected a JSON object");
    for (const auto &[key, value] : obj.items())
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }) == allowed.end())
            throw ContractViolation(std::string(where) + ": unknown key '" + key + "'");
}

template <class T>
void read(const json &obj, const char *key, T &out)
{
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

json vec3(const Vec3 &v)
{
    return json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3(const json &j)
{
    if (!j.is_array() || j.size() != 3)
        throw ContractViolation("positions must be arrays of three numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const ExperimentConfig &c)
{
    json protocols = json::array();
    for (Protocol p : c.protocols)
        protocols.push_back(std::string(to_string(p)));
    const auto &g = c.geometry;
    const auto &f = c.fading;
    const auto &p = c.options.penalty;
    const auto &t = c.options.ts;
    return {
        {"schema_version", kSchemaVersion},
        {"sweep", {{"variable", std::string(to_string(c.sweep))}, {"values", c.values}}},
        {"antennas", c.antennas},
        {"elements", c.elements},
        {"sinr_db", c.sinr_db},
        {"noise_dbm", c.noise_dbm},
        {"energy_budget", c.energy_budget},
        {"scenario", std::string(to_string(c.scenario))},
        {"protocols", protocols},
        {"realizations", c.realizations},
        {"seed", c.seed},
        {"threads", c.threads},
        {"trace", c.trace},
        {"output", c.output},
        {"geometry",
         {{"bs_position", vec3(g.bs_position)},
          {"ris_position", vec3(g.ris_position)},
          {"user_radius", g.user_radius},
          {"m_h", g.m_h},
          {"m_v", g.m_v}}},
        {"fading",
         {{"alpha_br", f.alpha_br}, {"alpha_ru", f.alpha_ru}, {"k_br", f.k_br}, {"k_ru", f.k_ru}, {"rho0", f.rho0}}},
        {"penalty",
         {{"eta0", p.eta0},
          {"chi0", p.chi0},
          {"omega", p.omega},
          {"varpi", p.varpi},
          {"epsilon_inner", p.epsilon_inner},
          {"epsilon_violation", p.epsilon_violation},
          {"n_max", p.n_max},
          {"outer_max", p.outer_max},
          {"eta_cap", p.eta_cap},
          {"chi_cap", p.chi_cap},
          {"solver_tolerance", p.solver_tolerance},
          {"rank_tolerance", p.rank_tolerance},
          {"ms_polish", p.ms_polish},
          {"init_attempts", p.init_attempts},
          {"starts", p.starts}}},
        {"ts",
         {{"randomizations", t.randomizations},
          {"lambda_margin", t.lambda_margin},
          {"solver_tolerance", t.solver_tolerance},
          {"refinement_sweeps", t.refinement_sweeps}}},
    };
}

} // namespace

ExperimentConfig config_from_json(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw ContractViolation(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"schema_version", "sweep", "antennas", "elements", "sinr_db", "noise_dbm", "energy_budget", "scenario",
                "protocols", "realizations", "seed", "threads", "trace", "output", "geometry", "fading", "penalty",
                "ts"});
    if (!j.contains("schema_version") || j.at("schema_version") != kSchemaVersion)
        throw ContractViolation("config schema_version must be " + std::to_string(kSchemaVersion));

    ExperimentConfig c;
    try
    {
        if (j.contains("sweep"))
        {
            const json &s = j.at("sweep");
            check_keys(s, "sweep", {"variable", "values"});
            if (s.contains("variable"))
                c.sweep = sweep_variable_from_string(s.at("variable").get<std::string>());
            read(s, "values", c.values);
        }
        read(j, "antennas", c.antennas);
        read(j, "elements", c.elements);
        read(j, "sinr_db", c.sinr_db);
        read(j, "noise_dbm", c.noise_dbm);
        read(j, "energy_budget", c.energy_budget);
        if (j.contains("scenario"))
            c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        if (j.contains("protocols"))
        {
            c.protocols.clear();
            for (const auto &p : j.at("protocols"))
                c.protocols.push_back(protocol_from_string(p.get<std::string>()));
        }
        read(j, "realizations", c.realizations);
        read(j, "seed", c.seed);
        read(j, "threads", c.threads);
        read(j, "trace", c.trace);
        read(j, "output", c.output);
        if (j.contains("geometry"))
        {
            const json &g = j.at("geometry");
            check_keys(g, "geometry", {"bs_position", "ris_position", "user_radius", "m_h", "m_v"});
            if (g.contains("bs_position"))
                c.geometry.bs_position = vec3(g.at("bs_position"));
            if (g.contains("ris_position"))
                c.geometry.ris_position = vec3(g.at("ris_position"));
            read(g, "user_radius", c.geometry.user_radius);
            read(g, "m_h", c.geometry.m_h);
            read(g, "m_v", c.geometry.m_v);
        }
        if (j.contains("fading"))
        {
            const json &f = j.at("fading");
            check_keys(f, "fading", {"alpha_br", "alpha_ru", "k_br", "k_ru", "rho0"});
            read(f, "alpha_br", c.fading.alpha_br);
            read(f, "alpha_ru", c.fading.alpha_ru);
            read(f, "k_br", c.fading.k_br);
            read(f, "k_ru", c.fading.k_ru);
            read(f, "rho0", c.fading.rho0);
        }
        if (j.contains("penalty"))
        {
            const json &p = j.at("penalty");
            auto &o = c.options.penalty;
            check_keys(p, "penalty",
                       {"eta0", "chi0", "omega", "varpi", "epsilon_inner", "epsilon_violation", "n_max", "outer_max",
                        "eta_cap", "chi_cap", "solver_tolerance", "rank_tolerance", "ms_polish", "init_attempts",
                        "starts"});
            read(p, "eta0", o.eta0);
            read(p, "chi0", o.chi0);
            read(p, "omega", o.omega);
            read(p, "varpi", o.varpi);
            read(p, "epsilon_inner", o.epsilon_inner);
            read(p, "epsilon_violation", o.epsilon_violation);
            read(p, "n_max", o.n_max);
            read(p, "outer_max", o.outer_max);
            read(p, "eta_cap", o.eta_cap);
            read(p, "chi_cap", o.chi_cap);
            read(p, "solver_tolerance", o.solver_tolerance);
            read(p, "rank_tolerance", o.rank_tolerance);
            read(p, "ms_polish", o.ms_polish);
            read(p, "init_attempts", o.init_attempts);
            read(p, "starts", o.starts);
        }
        if (j.contains("ts"))
        {
            const json &t = j.at("ts");
            auto &o = c.options.ts;
            check_keys(t, "ts", {"randomizations", "lambda_margin", "solver_tolerance", "refinement_sweeps"});
            read(t, "randomizations", o.randomizations);
            read(t, "lambda_margin", o.lambda_margin);
            read(t, "solver_tolerance", o.solver_tolerance);
            read(t, "refinement_sweeps", o.refinement_sweeps);
        }
    }
    catch (const json::exception &e)
    {
        throw ContractViolation(std::string("config field has the wrong type: ") + e.what());
    }
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig &config)
{
    return to_json(config).dump(2);
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

// ---- running ---------------------------------------------------------------------------------

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t realization_seed(std::uint64_t base, int realization, double sweep_value)
{
    const double v = sweep_value == 0.0 ? 0.0 : sweep_value; // -0 and +0 share a seed
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ static_cast<std::uint64_t>(realization));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

RunRecord run_single(const ExperimentConfig &config, double sweep_value, Protocol protocol, int realization)
{
    RunRecord rec;
    rec.sweep_value = sweep_value;
    rec.protocol = protocol;
    rec.realization = realization;
    rec.seed = realization_seed(config.seed, realization, sweep_value);
    try
    {
        const ProblemSpec spec = config.problem(sweep_value, protocol);
        // channels depend only on the realization seed, so every protocol sees the same draw
        std::mt19937_64 rng(rec.seed);
        const ChannelSet ch = generate_channels(spec, config.geometry, config.fading, rng);
        SchemeOptions opt = config.options;
        opt.penalty.seed = splitmix64(rec.seed ^ 0x5eedULL);
        opt.ts.seed = opt.penalty.seed;
        const SchemeResult r = solve_scheme(spec, ch, opt);
        rec.status = r.report.status;
        rec.power_w = r.solution.total_power;
        rec.outer_iterations = r.report.outer_iterations;
        rec.conic_solves = r.report.conic_solves;
        rec.ok = std::isfinite(rec.power_w) && rec.status != SolverStatus::Infeasible;
        for (int k = 0; k < 2; ++k)
            rec.ok = rec.ok && r.solution.achieved_rates[k] >= spec.rate_targets[k] - 1e-6;
        if (!rec.ok && r.report.message.size())
            rec.error = r.report.message;
    }
    catch (const std::exception &e)
    {
        rec.ok = false;
        rec.status = SolverStatus::SolverFailure;
        rec.error = e.what();
    }
    return rec;
}

ResultRow aggregate(const std::vector<RunRecord> &runs, double sweep_value, Protocol protocol, Scenario scenario)
{
    ResultRow row;
    row.sweep_value = sweep_value;
    row.protocol = protocol;
    row.scenario = scenario;
    double sum = 0.0, iters = 0.0;
    std::vector<double> ok;
    for (const auto &r : runs)
    {
        if (r.sweep_value != sweep_value || r.protocol != protocol)
            continue;
        if (r.ok)
        {
            ok.push_back(r.power_w);
            sum += r.power_w;
            iters += r.outer_iterations;
        }
        else
            ++row.n_fail;
    }
    row.n_ok = static_cast<int>(ok.size());
    if (ok.empty())
    {
        row.mean_power_dbm = std::numeric_limits<double>::quiet_NaN();
        row.stderr_dbm = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const double n = static_cast<double>(ok.size());
    const double mean = sum / n;
    row.mean_power_dbm = watts_to_dbm(mean);
    row.mean_iterations = iters / n;
    if (ok.size() > 1)
    {
        double ss = 0.0;
        for (double p : ok)
            ss += (p - mean) * (p - mean);
        const double se = std::sqrt(ss / (n - 1.0) / n);
        row.stderr_dbm = 10.0 / std::numbers::ln10 * se / mean;
    }
    return row;
}

ExperimentResults run_experiment(const ExperimentConfig &config)
{
    config.validate();
    ExperimentResults out;
    out.config = config;

    struct Job
    {
        double value;
        Protocol protocol;
        int realization;
    };
    std::vector<Job> jobs;
    for (double v : config.values)
        for (Protocol p : config.protocols)
            for (int i = 0; i < config.realizations; ++i)
                jobs.push_back({v, p, i});

    out.runs.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            out.runs[i] = run_single(config, jobs[i].value, jobs[i].protocol, jobs[i].realization);
    };
    unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(jobs.size()));
    if (threads == 1)
        worker();
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    for (double v : config.values)
        for (Protocol p : config.protocols)
            out.rows.push_back(aggregate(out.runs, v, p, config.scenario));
    return out;
}

// ---- output ----------------------------------------------------------------------------------

namespace
{

std::string num(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split(const std::string &line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_num(const std::string &s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
        throw ContractViolation("malformed number in CSV: " + s);
    return v;
}

} // namespace

std::string results_csv(const std::vector<ResultRow> &rows)
{
    std::string out = "sweep_value,protocol,scenario,mean_power_dbm,stderr_dbm,n_ok,n_fail\n";
    for (const auto &r : rows)
    {
        out += num(r.sweep_value) + ',' + std::string(to_string(r.protocol)) + ',' +
               std::string(to_string(r.scenario)) + ',' + num(r.mean_power_dbm) + ',' + num(r.stderr_dbm) + ',' +
               std::to_string(r.n_ok) + ',' + std::to_string(r.n_fail) + '\n';
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "sweep_value,protocol,scenario,mean_power_dbm,stderr_dbm,n_ok,n_fail")
        throw ContractViolation("results CSV: unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto f = split(line, ',');
        if (f.size() != 7)
            throw ContractViolation("results CSV: expected 7 fields in '" + line + "'");
        ResultRow r;
        r.sweep_value = parse_num(f[0]);
        r.protocol = protocol_from_string(f[1]);
        r.scenario = scenario_from_string(f[2]);
        r.mean_power_dbm = parse_num(f[3]);
        r.stderr_dbm = parse_num(f[4]);
        r.n_ok = std::stoi(f[5]);
        r.n_fail = std::stoi(f[6]);
        rows.push_back(r);
    }
    return rows;
}

void emit_figure_data(const ExperimentResults &results, const std::filesystem::path &dir)
{
    if (results.rows.empty())
        throw ContractViolation("emit_figure_data: no results to write");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    write_file(dir / "results.csv", results_csv(results.rows));

    std::string runs = "sweep_value,protocol,realization,seed,status,ok,power_w,outer_iterations,conic_solves\n";
    for (const auto &r : results.runs)
        runs += num(r.sweep_value) + ',' + std::string(to_string(r.protocol)) + ',' + std::to_string(r.realization) +
                ',' + std::to_string(r.seed) + ',' + std::string(to_string(r.status)) + ',' + (r.ok ? "1" : "0") +
                ',' + num(r.power_w) + ',' + std::to_string(r.outer_iterations) + ',' +
                std::to_string(r.conic_solves) + '\n';
    write_file(dir / "runs.csv", runs);

    json seeds = json::object();
    for (double v : results.config.values)
    {
        json list = json::array();
        for (int i = 0; i < results.config.realizations; ++i)
            list.push_back(realization_seed(results.config.seed, i, v));
        seeds[num(v)] = list;
    }
    json failures = json::array();
    for (const auto &r : results.runs)
        if (!r.ok)
            failures.push_back({{"sweep_value", r.sweep_value},
                                {"protocol", std::string(to_string(r.protocol))},
                                {"realization", r.realization},
                                {"status", std::string(to_string(r.status))},
                                {"error", r.error}});
    const json manifest = {
        {"schema_version", kSchemaVersion},
        {"library_version", kLibraryVersion},
        {"config", to_json(results.config)},
        {"realization_seeds", seeds},
        {"failures", failures},
        {"files", {"results.csv", "runs.csv"}},
    };
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

SolverReport run_convergence_trace(const ProblemSpec &spec, const ChannelSet &channels,
                                   const PenaltyOptions &options, const std::filesystem::path &path)
{
    if (spec.protocol != Protocol::ES && spec.protocol != Protocol::MS)
        throw ContractViolation("convergence traces are defined for ES and MS only");
    const auto res = solve_penalty(spec, channels, options);
    const auto &rep = res.report;

    // last inner record of every outer iteration
    std::string out = "outer,inner_iterations,power_w,penalized_objective,violation\n";
    for (int o = 0; o < static_cast<int>(rep.violation_trace.size()); ++o)
    {
        const TraceRecord *last = nullptr;
        for (const auto &r : rep.records)
            if (r.outer == o)
                last = &r;
        if (!last)
            continue;
        out += std::to_string(o) + ',' + std::to_string(rep.inner_iterations_per_outer[o]) + ',' + num(last->power) +
               ',' + num(last->penalized_objective) + ',' + num(rep.violation_trace[o]) + '\n';
    }
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    write_file(path, out);
    return rep;
}

void emit_traces(const ExperimentConfig &config, const std::filesystem::path &dir)
{
    for (double v : config.values)
        for (Protocol p : config.protocols)
        {
            if (p != Protocol::ES && p != Protocol::MS)
                continue;
            const ProblemSpec spec = config.problem(v, p);
            const std::uint64_t seed = realization_seed(config.seed, 0, v);
            std::mt19937_64 rng(seed);
            const ChannelSet ch = generate_channels(spec, config.geometry, config.fading, rng);
            PenaltyOptions opt = config.options.penalty;
            opt.seed = splitmix64(seed ^ 0x5eedULL);
            run_convergence_trace(spec, ch, opt,
                                  dir / "traces" /
                                      (std::string(to_string(p)) + "_" + std::string(to_string(config.sweep)) + "_" +
                                       num(v) + ".csv"));
        }
}

} // namespace starris::harness

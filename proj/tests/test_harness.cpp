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

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace starris;
using namespace starris::harness;

namespace
{

ExperimentConfig tiny()
{
    ExperimentConfig c;
    c.values = {2, 4};
    c.protocols = {Protocol::ES, Protocol::TS};
    c.realizations = 3;
    c.seed = 77;
    c.threads = 1;
    return c;
}

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const char *name)
{
    const auto d = std::filesystem::temp_directory_path() / "starris_tests" / name;
    std::filesystem::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("config JSON round trip")
{
    ExperimentConfig c = tiny();
    c.sweep = SweepVariable::SinrDb;
    c.values = {-3.5, 0, 6};
    c.scenario = Scenario::Multicast;
    c.options.penalty.starts = 2;
    c.options.ts.randomizations = 17;
    c.geometry.user_radius = 4.25;
    const std::string text = config_to_json(c);
    const ExperimentConfig back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.values == c.values);
    CHECK(back.scenario == Scenario::Multicast);
    CHECK(back.options.ts.randomizations == 17);
    CHECK(back.geometry.user_radius == 4.25);
}

TEST_CASE("config errors are rejected")
{
    CHECK_THROWS_AS(config_from_json("{"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"realizations": 3})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 99})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "bogus": 1})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "penalty": {"omega": 0.5}})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "sweep": {"values": [8, 6]}})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "sweep": {"values": []}})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "realizations": 0})"), ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "sweep": {"variable": "M", "values": [2.5]}})"),
                    ContractViolation);
    CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "realizations": "many"})"), ContractViolation);
    const auto c = config_from_json(R"({"schema_version": 1, "sweep": {"variable": "N", "values": [1, 2]}})");
    CHECK(c.sweep == SweepVariable::Antennas);
    CHECK(c.problem(2, Protocol::ES).antennas == 2);
    CHECK(c.problem(2, Protocol::ES).elements == c.elements);
}

TEST_CASE("realization seeds ignore the other sweep points")
{
    CHECK(realization_seed(1, 0, 6.0) == realization_seed(1, 0, 6.0));
    CHECK(realization_seed(1, 0, 6.0) != realization_seed(1, 1, 6.0));
    CHECK(realization_seed(1, 0, 6.0) != realization_seed(1, 0, 8.0));
    CHECK(realization_seed(1, 0, 6.0) != realization_seed(2, 0, 6.0));
    CHECK(realization_seed(1, 0, 0.0) == realization_seed(1, 0, -0.0));

    ExperimentConfig a = tiny();
    a.values = {4};
    ExperimentConfig b = tiny();
    b.values = {2, 4, 6};
    const auto ra = run_experiment(a);
    const auto rb = run_experiment(b);
    for (const auto &x : ra.runs)
        for (const auto &y : rb.runs)
            if (x.sweep_value == y.sweep_value && x.protocol == y.protocol && x.realization == y.realization)
            {
                CHECK(x.seed == y.seed);
                CHECK(x.power_w == y.power_w);
            }
}

TEST_CASE("aggregation: linear mean in dBm, propagated standard error")
{
    std::vector<RunRecord> runs(4);
    const double p[] = {1.0, 2.0, 3.0, 0.5};
    for (int i = 0; i < 4; ++i)
    {
        runs[i].sweep_value = 1.0;
        runs[i].ok = i < 3;
        runs[i].power_w = p[i];
        runs[i].outer_iterations = i + 1;
    }
    const auto row = aggregate(runs, 1.0, Protocol::ES, Scenario::Unicast);
    CHECK(row.n_ok == 3);
    CHECK(row.n_fail == 1);
    CHECK(row.mean_power_dbm == doctest::Approx(30.0 + 10.0 * std::log10(2.0)).epsilon(1e-14));
    const double se = std::sqrt(1.0 / 3.0); // sample sd 1, n = 3
    CHECK(row.stderr_dbm == doctest::Approx(10.0 / std::log(10.0) * se / 2.0).epsilon(1e-12));
    CHECK(row.mean_iterations == doctest::Approx(2.0));
    CHECK(watts_to_dbm(1.0) == 30.0);

    const auto empty = aggregate({}, 1.0, Protocol::ES, Scenario::Unicast);
    CHECK(empty.n_ok == 0);
    CHECK(std::isnan(empty.mean_power_dbm));
}

TEST_CASE("CSV parse-back equals the in-memory table")
{
    const auto res = run_experiment(tiny());
    const auto parsed = parse_results_csv(results_csv(res.rows));
    REQUIRE(parsed.size() == res.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i)
    {
        CHECK(parsed[i].sweep_value == res.rows[i].sweep_value);
        CHECK(parsed[i].protocol == res.rows[i].protocol);
        CHECK(parsed[i].scenario == res.rows[i].scenario);
        CHECK(parsed[i].mean_power_dbm == res.rows[i].mean_power_dbm);
        CHECK(parsed[i].stderr_dbm == res.rows[i].stderr_dbm);
        CHECK(parsed[i].n_ok == res.rows[i].n_ok);
        CHECK(parsed[i].n_fail == res.rows[i].n_fail);
    }
    CHECK_THROWS_AS(parse_results_csv("a,b\n"), ContractViolation);
}

TEST_CASE("rows are consistent with the stored per-run records")
{
    const auto res = run_experiment(tiny());
    REQUIRE(res.runs.size() == 2u * 2u * 3u);
    for (const auto &row : res.rows)
    {
        double sum = 0.0;
        int n = 0;
        for (const auto &r : res.runs)
            if (r.sweep_value == row.sweep_value && r.protocol == row.protocol && r.ok)
            {
                sum += r.power_w;
                ++n;
            }
        REQUIRE(n == row.n_ok);
        CHECK(std::abs(watts_to_dbm(sum / n) - row.mean_power_dbm) <= 1e-12);
    }
}

TEST_CASE("identical config gives identical output bytes, whatever the thread count")
{
    ExperimentConfig c = tiny();
    const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
    emit_figure_data(run_experiment(c), d1);
    c.threads = 3;
    emit_figure_data(run_experiment(c), d2);
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    CHECK(slurp(d1 / "runs.csv") == slurp(d2 / "runs.csv"));
    CHECK(slurp(d1 / "results.csv").rfind("sweep_value,protocol,scenario,mean_power_dbm,stderr_dbm,n_ok,n_fail\n", 0) ==
          0);

    // the manifest alone reproduces the run
    const auto manifest = nlohmann::json::parse(slurp(d1 / "manifest.json"));
    CHECK(manifest.at("schema_version") == kSchemaVersion);
    CHECK(manifest.at("library_version") == kLibraryVersion);
    CHECK(manifest.at("realization_seeds").at("2").at(1) == realization_seed(c.seed, 1, 2.0));
    const auto again = config_from_json(manifest.at("config").dump());
    const auto d3 = scratch_dir("det3");
    emit_figure_data(run_experiment(again), d3);
    CHECK(slurp(d1 / "results.csv") == slurp(d3 / "results.csv"));
}

TEST_CASE("per-run failures are recorded, not thrown")
{
    ExperimentConfig c = tiny();
    c.values = {3}; // odd M: the conventional RIS split is undefined
    c.protocols = {Protocol::ConvRis, Protocol::TS};
    c.realizations = 2;
    const auto res = run_experiment(c);
    CHECK(res.rows[0].n_fail == 2);
    CHECK(res.rows[0].n_ok == 0);
    CHECK(res.rows[1].n_ok == 2);
    CHECK_FALSE(res.runs[0].error.empty());
}

TEST_CASE("emit errors")
{
    CHECK_THROWS_AS(emit_figure_data(ExperimentResults{}, scratch_dir("empty")), ContractViolation);
    const auto file = scratch_dir("blocker");
    std::filesystem::create_directories(file.parent_path());
    std::ofstream(file) << "x";
    const auto res = run_experiment([] {
        ExperimentConfig c = tiny();
        c.values = {2};
        c.protocols = {Protocol::TS};
        c.realizations = 1;
        return c;
    }());
    CHECK_THROWS(emit_figure_data(res, file / "sub"));
}

TEST_CASE("convergence trace file")
{
    auto spec = make_problem(2, 4, Protocol::MS, Scenario::Unicast, 0.0);
    std::mt19937_64 rng(5);
    const auto ch = generate_channels(spec, GeometryConfig{}, FadingConfig{}, rng);
    const auto path = scratch_dir("trace") / "ms.csv";
    const auto rep = run_convergence_trace(spec, ch, PenaltyOptions{}, path);
    std::istringstream in(slurp(path));
    std::string line;
    std::getline(in, line);
    CHECK(line == "outer,inner_iterations,power_w,penalized_objective,violation");
    int rows = 0;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == static_cast<int>(rep.violation_trace.size()));

    spec.protocol = Protocol::TS;
    CHECK_THROWS_AS(run_convergence_trace(spec, ch, PenaltyOptions{}, path), ContractViolation);
}

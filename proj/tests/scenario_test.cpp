// Copyright 2026 The corrspace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "corrspace/scenario.hpp"

namespace corrspace {
namespace {

using nlohmann::json;

json upload_doc() {
    return json::parse(R"({
      "name": "t",
      "protocol": "upload",
      "wire": {"preset": "cluster", "sites": 4},
      "psi": [[0.6, 0], [0, 0.8]],
      "outcome": "enumerate"
    })");
}

std::string config_error(const json &doc) {
    try {
        parse_scenario(doc, 1e-10);
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kConfig) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "accepted " << doc.dump();
    return "";
}

TEST(Parse, ExplicitWire) {
    json doc = upload_doc();
    doc["wire"] = json::parse(R"({"sites": 3,
        "a0": [[[0.7071067811865476, 0], [0, 0]], [[0.7071067811865476, 0], [0, 0]]],
        "a1": [[[0, 0], [0.7071067811865476, 0]], [[0, 0], [-0.7071067811865476, 0]]]})");
    ScenarioConfig c = parse_scenario(doc, 1e-10);
    WireState cl = cluster_wire(3);
    EXPECT_LT(max_abs((c.wire.a0 - cl.a0).eval()), 1e-15);
    EXPECT_LT(max_abs((c.wire.a1 - cl.a1).eval()), 1e-15);
    EXPECT_EQ(c.outcome_mode, OutcomeMode::kEnumerate);
}

TEST(Parse, MalformedComplexNamesTheField) {
    json doc = upload_doc();
    doc["wire"] = json::parse(R"({"sites": 3,
        "a0": [[[1, 0], [0, 0]], [[0, 0], [1]]],
        "a1": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]})");
    EXPECT_NE(config_error(doc).find("wire.a0[1][1]"), std::string::npos);
}

TEST(Parse, NonNormalizedPsi) {
    json doc = upload_doc();
    doc["psi"] = json::parse("[[0.6, 0], [0, 0.81]]");
    EXPECT_NE(config_error(doc).find("'psi'"), std::string::npos);
    doc["psi"] = json::parse("[[0.6, 0], [0, 0.8000001]]");
    EXPECT_NO_THROW(parse_scenario(doc, 1e-10));
}

TEST(Parse, SiteRange) {
    json doc = upload_doc();
    doc["wire"]["sites"] = 20;
    try {
        parse_scenario(doc, 1e-10);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kCapacityExceeded);
        EXPECT_EQ(exit_code_for(e), kExitCapacity);
    }
    doc["wire"]["sites"] = 1;
    EXPECT_NE(config_error(doc).find("wire.sites"), std::string::npos);
}

TEST(Parse, UnknownFieldsAndValues) {
    json doc = upload_doc();
    doc["psy"] = 1;
    EXPECT_NE(config_error(doc).find("psy"), std::string::npos);
    doc = upload_doc();
    doc["protocol"] = "teleport";
    config_error(doc);
    doc = upload_doc();
    doc["outcome"] = "B7";
    config_error(doc);
    doc = upload_doc();
    doc["expect"] = {{"fidelty", 1}};
    config_error(doc);
}

TEST(Parse, OutcomeForms) {
    json doc = upload_doc();
    doc["outcome"] = "B3";
    EXPECT_EQ(parse_scenario(doc, 1e-10).outcome, 2);
    doc.erase("outcome");
    doc["bell"] = "sample";
    EXPECT_EQ(parse_scenario(doc, 1e-10).outcome_mode, OutcomeMode::kSample);
    json cz = json::parse(R"({
      "protocol": "gate-teleport-cz",
      "wire": {"preset": "cluster", "sites": 3},
      "second_wire": {"preset": "cluster", "sites": 3},
      "psi": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]],
      "outcome": {"first": [1, 0, 1], "second": [0, 1, 1]}
    })");
    EXPECT_EQ(parse_scenario(cz, 1e-10).outcome, 5 + 8 * 6);
}

TEST(Parse, AnglesAndGates) {
    json doc = upload_doc();
    doc["protocol"] = "gate-teleport-u";
    doc["unitary"] = "T";
    doc["wire"] = {{"preset", "theta"}, {"sites", 4}, {"theta", "2*pi/3"}};
    ScenarioConfig c = parse_scenario(doc, 1e-10);
    EXPECT_NEAR(std::arg(c.unitary(1, 1)), std::numbers::pi / 4, 1e-15);
    WireState t = theta_wire(2 * std::numbers::pi / 3, 4);
    EXPECT_LT(max_abs((c.wire.a0 - t.a0).eval()), 1e-15);
    doc["wire"]["theta"] = "tau";
    config_error(doc);
}

TEST(Parse, TwoWireProtocolsNeedSecondWire) {
    json doc = upload_doc();
    doc["protocol"] = "swap";
    doc.erase("psi");
    EXPECT_NE(config_error(doc).find("second_wire"), std::string::npos);
}

TEST(Parse, ToleranceFromEnvironment) {
    setenv("CORRSPACE_TOLERANCE", "1e-6", 1);
    EXPECT_DOUBLE_EQ(default_tolerance_from_env(), 1e-6);
    setenv("CORRSPACE_TOLERANCE", "abc", 1);
    EXPECT_THROW(default_tolerance_from_env(), Error);
    unsetenv("CORRSPACE_TOLERANCE");
    EXPECT_DOUBLE_EQ(default_tolerance_from_env(), kDefaultTolerance);
}

TEST(Branches, ExpansionCounts) {
    ScenarioConfig c = parse_scenario(upload_doc(), 1e-10);
    EXPECT_EQ(expand_branches(c).size(), 4u);
    c.prepare_orthogonalize = true;
    c.filter_mode = FilterMode::kEnumerate;
    EXPECT_EQ(expand_branches(c).size(), 8u);
    c.outcome_mode = OutcomeMode::kSample;
    EXPECT_EQ(expand_branches(c).size(), 2u);
    c.protocol = ProtocolKind::kGateTeleportCz;
    c.outcome_mode = OutcomeMode::kEnumerate;
    c.filter_mode = FilterMode::kForceSuccess;
    EXPECT_EQ(expand_branches(c).size(), 64u);
}

TEST(Run, EnumeratedProbabilitiesSumToOne) {
    RunReport r = run_scenario(parse_scenario(upload_doc(), 1e-10));
    ASSERT_EQ(r.runs.size(), 4u);
    double sum = 0;
    for (const auto &run : r.runs) {
        sum += run.protocol.metrics.at("probability");
        EXPECT_NEAR(run.protocol.fidelity, 1, 1e-10);
    }
    EXPECT_NEAR(sum, 1, 1e-12);
    EXPECT_TRUE(r.agreement());
}

TEST(Run, DeltasCoverComparableFields) {
    RunReport r = run_scenario(parse_scenario(upload_doc(), 1e-10));
    const auto &d = r.runs[0].deltas;
    for (const char *key : {"fidelity", "success", "sites_consumed", "frame", "prob:B1", "prob:B4", "wire_boundary",
                            "correlation", "metric:probability"}) {
        EXPECT_TRUE(d.count(key)) << key;
    }
}

TEST(Run, DeterministicBodies) {
    json doc = upload_doc();
    doc["outcome"] = "sample";
    doc["seed"] = 12345;
    doc["prepare"] = "orthogonalize";
    doc["wire"] = {{"preset", "decomposed"}, {"sites", 6}, {"r1", 0.5}};
    ScenarioConfig c = parse_scenario(doc, 1e-10);
    std::string a = report_json(run_scenario(c), false).dump();
    std::string b = report_json(run_scenario(c), false).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.find("wall_time"), std::string::npos);
    EXPECT_NE(report_json(run_scenario(c), true).dump().find("wall_time_ms"), std::string::npos);
}

TEST(Run, ExpectationsDecideTheStatus) {
    json doc = upload_doc();
    doc["expect"] = {{"fidelity", 1.0}, {"prob:B2", 0.25}};
    EXPECT_EQ(scenario_status(parse_scenario(doc, 1e-10)), kExitOk);
    doc["expect"]["prob:B2"] = 0.3;
    EXPECT_EQ(scenario_status(parse_scenario(doc, 1e-10)), kExitTolerance);
}

TEST(Sweep, ThetaOverlaps) {
    ScenarioConfig c = load_scenario(std::string(CORRSPACE_SCENARIO_DIR) + "/theta_sweep.scenario", 1e-10);
    SweepReport r = run_sweep(c);
    std::vector<double> expected{1, 0.5625, 0.25, 0.0625, 0};
    ASSERT_EQ(r.rows.size(), expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(r.rows[i].value, expected[i], 1e-10);
        EXPECT_TRUE(r.rows[i].within_tolerance);
    }
    std::string csv = report_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "theta,branch,probability,value,filter_success,oracle_delta,within_tolerance");
}

TEST(Sweep, R1RowsPerOutcome) {
    ScenarioConfig c = load_scenario(std::string(CORRSPACE_SCENARIO_DIR) + "/r1_sweep.scenario", 1e-10);
    SweepReport r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), 4 * c.sweep->grid.size());
    for (size_t g = 0; g < c.sweep->grid.size(); ++g) {
        double sum = 0;
        for (int o = 0; o < 4; ++o) {
            const SweepRow &row = r.rows[4 * g + o];
            sum += row.probability;
            EXPECT_NEAR(row.value, 1, 1e-10);
        }
        EXPECT_NEAR(sum, 1, 1e-12);
    }
    // F always succeeds on an orthogonal wire and less often as r1 grows.
    EXPECT_NEAR(r.rows.front().filter_success, 1, 1e-12);
    for (size_t g = 1; g < c.sweep->grid.size(); ++g) {
        EXPECT_LT(r.rows[4 * g].filter_success, r.rows[4 * (g - 1)].filter_success);
    }
}

TEST(Bundled, AllScenariosPass) {
    int count = 0;
    for (const auto &entry : std::filesystem::directory_iterator(CORRSPACE_SCENARIO_DIR)) {
        if (entry.path().extension() != ".scenario") {
            continue;
        }
        ++count;
        ScenarioConfig c = load_scenario(entry.path().string(), 1e-10);
        EXPECT_EQ(scenario_status(c), kExitOk) << entry.path();
    }
    EXPECT_GE(count, 11);
}

}  // namespace
}  // namespace corrspace

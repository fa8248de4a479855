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

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "corrspace/acceptance.hpp"
#include "corrspace/scenario.hpp"

namespace {

using namespace corrspace;

struct Flags {
    std::string file;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    std::string format = "report";
    bool enumerate = false;
};

ScenarioConfig load(const Flags &flags) {
    ScenarioConfig config = load_scenario(flags.file, default_tolerance_from_env());
    if (flags.seed) {
        config.seed = *flags.seed;
    }
    if (flags.tolerance) {
        if (!(*flags.tolerance > 0)) {
            throw Error(ErrorCode::kConfig, "--tolerance must be positive");
        }
        config.tolerance = *flags.tolerance;
    }
    if (flags.enumerate) {
        config.outcome_mode = OutcomeMode::kEnumerate;
        config.filter_mode = FilterMode::kEnumerate;
    }
    return config;
}

template <typename Report>
int emit(const Report &report, const Flags &flags) {
    if (flags.format == "csv") {
        std::cout << report_csv(report);
    } else {
        std::cout << report_json(report).dump(2) << '\n';
    }
    if (!report.agreement()) {
        std::cerr << "oracle agreement outside tolerance " << report.config.tolerance << '\n';
        return kExitTolerance;
    }
    if (!report.expectations_met()) {
        std::cerr << "expected values not reproduced\n";
        return kExitTolerance;
    }
    return kExitOk;
}

void add_common(CLI::App *cmd, Flags &flags) {
    cmd->add_option("file", flags.file, "scenario file")->required();
    cmd->add_option("--seed", flags.seed, "seed for sampled branches");
    cmd->add_option("--tolerance", flags.tolerance, "agreement tolerance");
    cmd->add_option("--format", flags.format, "output format")->check(CLI::IsMember({"report", "csv"}));
    cmd->add_flag("--enumerate", flags.enumerate, "enumerate every measurement and filter branch");
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Correlation-space quantum wire simulator"};
    app.require_subcommand(1);
    Flags run_flags;
    Flags sweep_flags;
    std::string scenario_dir = CORRSPACE_SCENARIO_DIR;
    CLI::App *run = app.add_subcommand("run", "run a scenario and compare against the oracle");
    add_common(run, run_flags);
    CLI::App *sweep = app.add_subcommand("sweep", "run a scenario's parameter sweep");
    add_common(sweep, sweep_flags);
    CLI::App *selftest = app.add_subcommand("selftest", "run the acceptance suite");
    selftest->add_option("--scenarios", scenario_dir, "directory of bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            return emit(run_scenario(load(run_flags)), run_flags);
        }
        if (sweep->parsed()) {
            return emit(run_sweep(load(sweep_flags)), sweep_flags);
        }
        auto results = run_acceptance(scenario_dir);
        std::cout << format_acceptance(results);
        for (const auto &r : results) {
            if (!r.passed) {
                return kExitTolerance;
            }
        }
        return kExitOk;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

// Copyright 2026 The otoc-thermalize Authors
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
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otoc/experiment.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Finite-dimensional thermalization bounds from out-of-time-order correlators"};
    app.require_subcommand(1);

    auto *run = app.add_subcommand("run", "run one experiment from a config file");
    std::string config_path, out, format;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
    run->add_option("--config", config_path, "key = value config file")->required();
    auto *seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
    auto *out_opt = run->add_option("--out", out, "output path; stdout when absent");
    auto *fmt_opt = run->add_option("--format", format, "csv or json");
    run->add_option("--set", sets, "extra key=value override, repeatable");

    auto *list = app.add_subcommand("list", "list experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : otoc::kExitConfig;
    }

    if (list->parsed()) {
        for (const auto &e : otoc::experiment_list()) std::cout << e.name << "\t" << e.summary << "\n";
        return otoc::kExitPass;
    }

    otoc::ExperimentConfig cfg;
    try {
        otoc::KeyValues kv = otoc::load_config_file(config_path);
        for (const auto &s : sets) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw otoc::ConfigError("--set expects key=value, got '" + s + "'");
            kv[otoc::trim(s.substr(0, eq))] = otoc::trim(s.substr(eq + 1));
        }
        if (*seed_opt) kv["seed"] = std::to_string(seed);
        if (*out_opt) kv["out"] = out;
        if (*fmt_opt) kv["format"] = format;
        cfg = otoc::config_from_keys(kv);
        otoc::validate_config(cfg);
    } catch (const otoc::Error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return otoc::kExitConfig;
    }

    try {
        otoc::RunResult res = otoc::run_experiment(cfg);
        otoc::emit_results(res, cfg, std::cout);
        int rc = res.exit_code();
        for (const auto &v : res.verdicts) {
            if (!v.pass && v.kind != otoc::VerdictKind::report) {
                std::cerr << "FAIL [" << otoc::kind_name(v.kind) << "] " << v.check << ": " << v.note << "\n";
            }
        }
        return rc;
    } catch (const otoc::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return otoc::kExitConfig;
    } catch (const otoc::PreconditionError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return otoc::kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return otoc::kExitSoundness;
    }
}

// Command-line front end: run / validate / extract / report.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smc/errors.hpp"
#include "smc/harness.hpp"
#include "smc/util.hpp"

namespace {

// Error JSON goes to stdout so callers can parse failures programmatically.
int fail(const std::string& module, const std::exception& ex) {
    nlohmann::ordered_json j;
    j["module"] = module;
    j["message"] = ex.what();
    std::fputs(smc::util::dump_json_12(j).c_str(), stdout);
    return module == "config" ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic multiverse communication harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    auto* run = app.add_subcommand("run", "run a scenario from a config file");
    run->add_option("config", config_path, "config JSON path")->required();
    run->add_option("--seed", seed_override, "replace the config seed list with one seed");
    run->add_option("--out", out_override, "replace the config output directory");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "parse and check a config without running");
    validate->add_option("config", validate_path, "config JSON path")->required();

    std::string actors_dir;
    std::string extract_out;
    auto* extract = app.add_subcommand("extract", "extract a symbolic graph from saved actors");
    extract->add_option("actors", actors_dir, "directory with speaker.smnn + listener.smnn")
        ->required();
    extract->add_option("--out", extract_out, "output directory")->required();

    std::string run_dir;
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("run_dir", run_dir, "run directory with metrics.json")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        smc::harness::ExperimentConfig config;
        try {
            config = smc::harness::ExperimentConfig::from_file(config_path);
            if (seed_override.has_value()) config.seeds = {*seed_override};
            if (out_override.has_value()) config.output = *out_override;
        } catch (const std::exception& ex) {
            return fail("config", ex);
        }
        try {
            const auto dir = smc::harness::run_scenario(config);
            std::printf("%s\n", dir.string().c_str());
        } catch (const std::exception& ex) {
            return fail(config.scenario, ex);
        }
        return 0;
    }
    if (validate->parsed()) {
        try {
            const auto config = smc::harness::ExperimentConfig::from_file(validate_path);
            std::printf("ok: scenario %s, %zu seed(s), output %s\n", config.scenario.c_str(),
                        config.seeds.size(), config.output.c_str());
        } catch (const std::exception& ex) {
            return fail("config", ex);
        }
        return 0;
    }
    if (extract->parsed()) {
        try {
            smc::harness::extract_actors(actors_dir, extract_out);
            std::printf("%s\n", extract_out.c_str());
        } catch (const std::exception& ex) {
            return fail("extract", ex);
        }
        return 0;
    }
    try {
        std::fputs(smc::harness::summarize_run(run_dir).c_str(), stdout);
    } catch (const std::exception& ex) {
        return fail("report", ex);
    }
    return 0;
}

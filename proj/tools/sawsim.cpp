// sawsim <scenario> [--config <file>] --out <dir> [--jobs N] [--set key=value ...]

#include "sawsim/config.hpp"
#include "sawsim/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) sawsim::fail(sawsim::ErrorKind::config, "cannot read config '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

bool mentions_scenario(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        line = line.substr(0, line.find('#'));
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t\r") + 1);
        if (key == "scenario") return true;
    }
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAW-isolated gate driver scenario runner"};
    std::string scenario, config_path, out_dir;
    int jobs = 1;
    std::vector<std::string> sets;
    app.add_option("scenario", scenario, "characterize | dpt | buck | thermal | sweep")->required();
    app.add_option("--config", config_path, "config file (section.key = value lines)");
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--set", sets, "override, key=value (repeatable)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::string text = config_path.empty() ? std::string() : read_file(config_path);
        const auto chosen = sawsim::parse_scenario(scenario);
        if (!mentions_scenario(text)) text += "\nscenario = " + scenario + "\n";
        auto cfg = sawsim::parse_config(text);
        if (cfg.scenario != chosen)
            sawsim::fail(sawsim::ErrorKind::config, "scenario: config says '" + sawsim::scenario_name(cfg.scenario) +
                                                        "' but the command line asks for '" + scenario + "'");
        for (const auto& s : sets) sawsim::apply_setting(cfg, s);
        cfg.validate();

        const auto report = sawsim::run_scenario(cfg, out_dir, jobs);
        for (const auto& [k, v] : report.metrics) std::printf("%s = %.10g\n", k.c_str(), v);
        std::printf("trace_hash = %s\n", sawsim::hash_hex(report.trace_hash).c_str());
        return 0;
    } catch (const sawsim::Error& e) {
        std::fprintf(stderr, "sawsim: %s\n", e.what());
        return sawsim::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sawsim: %s\n", e.what());
        return 1;
    }
}

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfruin/commands.hpp"
#include "gfruin/errors.hpp"

namespace {

using gfruin::Error;
using gfruin::ErrorKind;
using gfruin::cli::json;

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error(ErrorKind::ConfigError, "failed writing '" + path + "'");
}

int report_error(ErrorKind kind, const std::string& message) {
    json e{{"error", std::string(gfruin::to_string(kind))}, {"message", message}};
    std::cerr << e.dump() << '\n';
    return gfruin::exit_code_for(kind);
}

unsigned threads_from_env(unsigned fallback) {
    const char* env = std::getenv("GF_RUIN_THREADS");
    if (!env || !*env) return fallback;
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(env, &pos);
        if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
        return static_cast<unsigned>(v);
    } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, std::string("GF_RUIN_THREADS is not a count: '") + env + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-deviation constants and ruin simulation for (g,F)-processes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gfruin::cli::version());

    std::string config_path;
    std::string out_path = "-";

    auto* coeffs = app.add_subcommand("coeffs", "Taylor coefficients of g with asymptotic ratios (CSV)");
    std::size_t n_coeffs = 20;
    coeffs->add_option("-c,--config", config_path, "Run configuration")->required();
    coeffs->add_option("-n,--n", n_coeffs, "Number of coefficients")->check(CLI::PositiveNumber);
    coeffs->add_option("-o,--out", out_path, "CSV destination, - for stdout");

    auto* solve = app.add_subcommand("solve", "Classify and compute theta, tau, A (JSON)");
    solve->add_option("-c,--config", config_path, "Run configuration")->required();
    solve->add_option("--json", out_path, "JSON destination, - for stdout");

    auto* scenario = app.add_subcommand("scenario", "Most-likely path and tilt profile tables (CSV)");
    gfruin::cli::ScenarioOptions sopts;
    std::optional<double> scen_t;
    std::optional<double> grid_max;
    scenario->add_option("-c,--config", config_path, "Run configuration")->required();
    scenario->add_option("--gamma", sopts.gammas, "Gamma values (default: the configured one)");
    scenario->add_flag("--figure", sopts.figure, "Use gamma in {2/3, 1, 2}");
    scenario->add_option("--t", scen_t, "Threshold for the tilt profile");
    scenario->add_option("--grid-max", grid_max, "Upper end of the lambda grid");
    scenario->add_option("--grid-points", sopts.grid_points, "Number of lambda grid points");
    scenario->add_flag("--force", sopts.force, "Accept a near-flat minimum");
    scenario->add_option("-o,--out", out_path, "CSV destination, - for stdout");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimation of P{M > t} (JSON + CSV)");
    std::optional<std::string> sim_json;
    std::optional<std::string> sim_csv;
    std::vector<double> sim_t;
    std::optional<std::size_t> sim_reps;
    std::optional<std::uint64_t> sim_seed;
    std::optional<unsigned> sim_threads;
    std::optional<std::string> sim_estimator;
    bool force = false;
    bool no_samples = false;
    simulate->add_option("-c,--config", config_path, "Run configuration")->required();
    simulate->add_option("--json", sim_json, "JSON destination, - for stdout (default: outputs.json or stdout)");
    simulate->add_option("--csv", sim_csv, "Diagnostics CSV destination (default: outputs.csv)");
    simulate->add_option("--t", sim_t, "Override sim.t_levels")->delimiter(',');
    simulate->add_option("--reps,--replications", sim_reps, "Override sim.replications");
    simulate->add_option("--seed", sim_seed, "Override sim.seed");
    simulate->add_option("--threads", sim_threads, "Override sim.threads and GF_RUIN_THREADS");
    simulate->add_option("--estimator", sim_estimator, "crude or tilted");
    simulate->add_flag("--force", force, "Accept a near-flat minimum");
    simulate->add_flag("--no-samples", no_samples, "Omit n_t samples from the JSON");

    auto* validate = app.add_subcommand("validate", "Run the oracle suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(ErrorKind::ConfigError, e.what());
    }

    try {
        if (*validate) {
            const auto lines = gfruin::cli::run_validation();
            bool ok = true;
            for (const auto& l : lines) {
                std::cout << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
                ok = ok && l.pass;
            }
            return ok ? 0 : 3;
        }

        auto cfg = gfruin::load_config(config_path);

        if (*coeffs) {
            write_text(out_path, gfruin::cli::coeffs_csv(cfg, n_coeffs));
        } else if (*solve) {
            write_text(out_path, gfruin::cli::solve_json(cfg).dump(2) + "\n");
        } else if (*scenario) {
            sopts.t = scen_t;
            sopts.grid_max = grid_max;
            write_text(out_path, gfruin::cli::scenario_csv(cfg, sopts));
        } else if (*simulate) {
            cfg.sim.threads = sim_threads ? *sim_threads : threads_from_env(cfg.sim.threads);
            if (!sim_t.empty()) cfg.sim.t_levels = sim_t;
            if (sim_reps) cfg.sim.replications = *sim_reps;
            if (sim_seed) cfg.sim.seed = *sim_seed;
            if (sim_estimator) {
                try {
                    cfg.sim.estimator = gfruin::parse_estimator(*sim_estimator);
                } catch (const Error& e) {
                    return report_error(ErrorKind::ConfigError, e.what());
                }
            }
            const auto out = gfruin::cli::run_simulate(cfg, force, !no_samples);
            const std::string json_path = sim_json.value_or(cfg.outputs.json.empty() ? "-" : cfg.outputs.json);
            const std::string csv_path = sim_csv.value_or(cfg.outputs.csv);
            write_text(json_path, out.report.dump(2) + "\n");
            if (!csv_path.empty()) write_text(csv_path, out.csv);
        }
        return 0;
    } catch (const Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error(ErrorKind::InvalidArgument, e.what());
    }
}

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfruin/config.hpp"
#include "gfruin/large_deviations.hpp"
#include "gfruin/simulator.hpp"

namespace gfruin::cli {

using nlohmann::json;

/// i, g_i, s_i = sum_{j<i} g_j and the coefficient asymptotics ratios.
std::string coeffs_csv(const RunConfig& cfg, std::size_t n);

json solution_to_json(const LdpSolution& sol);
/// Classify and solve; errors propagate as gfruin::Error.
json solve_json(const RunConfig& cfg);

struct ScenarioOptions {
    /// Empty means the configured gamma.
    std::vector<double> gammas;
    /// Three-curve figure, gamma in {2/3, 1, 2}.
    bool figure = false;
    /// Threshold for the tilt profile; empty means the first sim.t_levels
    /// entry, or 10 if there is none.
    std::optional<double> t;
    /// Upper end of the lambda grid; empty means 3 max(tau).
    std::optional<double> grid_max;
    std::size_t grid_points = 121;
    bool force = false;
};

/// Long-format CSV with columns table,gamma,x,y,tilted_mean: "path" rows
/// carry (lambda, S(lambda)), "tilt" rows carry (v, lambda_v, m(lambda_v)).
std::string scenario_csv(const RunConfig& cfg, const ScenarioOptions& opts);

json result_to_json(const EstimateResult& r, bool include_samples = true);

/// Configuration hash, seed and library versions. Independent of thread
/// count and free of timestamps so repeated runs are byte-identical.
json manifest(const RunConfig& cfg);

struct SimulateOutput {
    json report;
    /// Diagnostics: t,table,index,center,value,weight_sum,target.
    std::string csv;
    std::vector<EstimateResult> results;
};

SimulateOutput run_simulate(const RunConfig& cfg, bool force = false, bool include_samples = true);

struct ValidationLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// P{max_{k <= n} S_k > t} with n = g.size() by enumerating all 2^n
/// innovation outcomes.
double enumerate_two_point(std::span<const double> g, const TwoPointSpec& law, double t);

/// Closed-form, identity and enumeration oracles.
std::vector<ValidationLine> run_validation();

std::string version();

}  // namespace gfruin::cli

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gfruin/commands.hpp"
#include "gfruin/config.hpp"
#include "gfruin/errors.hpp"
#include "gfruin/kernel_coeffs.hpp"

using namespace gfruin;
namespace fs = std::filesystem;

namespace {

const std::string kGaussian1 = R"(gamma = 1.0
innovation = { kind = "gaussian", mu = -1.0, sigma = 1.0 }

[sim]
t_levels = [6.0]
replications = 100_000
seed = 42
estimator = "tilted"
)";

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::InvalidArgument;
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / ("gfruin_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_binary(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(GF_RUIN_BINARY) + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
    for (const auto& entry : fs::directory_iterator(fs::path(GFRUIN_SOURCE_DIR) / "configs")) {
        const std::string text = read_file(entry.path());
        const auto cfg = parse_config(text);
        const auto again = parse_config(emit_config(cfg));
        EXPECT_EQ(cfg, again) << entry.path();
        EXPECT_EQ(emit_config(again), emit_config(cfg));
    }
}

TEST(Config, FullRoundTrip) {
    const std::string text = R"(# every key
gamma = 0.8
theta_poly = [1, 0.25, -0.0625]
phi_poly = [1.0, -0.3]
innovation = { kind = "two_point", p = 0.3, lo = -2.0, hi = 1.0 }

[sim]
t_levels = [1.5, 2.0e1, 0.1]
replications = 12345
seed = 18446744073709551615
horizon_mult = 3.25
path_length = 77
threads = 6
estimator = "crude"
convolution = "fft"

[outputs]
json = "out dir/r.json"
csv = "diag.csv"
)";
    const auto cfg = parse_config(text);
    EXPECT_EQ(cfg.g.theta_poly, (std::vector<double>{1.0, 0.25, -0.0625}));
    EXPECT_EQ(cfg.sim.seed, 18446744073709551615ull);
    EXPECT_EQ(cfg.sim.t_levels[2], 0.1);
    EXPECT_EQ(cfg.sim.path_length, 77u);
    EXPECT_EQ(cfg.sim.convolution, ConvolutionMethod::Fft);
    EXPECT_EQ(cfg.outputs.json, "out dir/r.json");
    EXPECT_EQ(parse_config(emit_config(cfg)), cfg);
    // A value with no short decimal form survives.
    auto odd = cfg;
    odd.g.gamma = 1.0 / 3.0;
    odd.sim.horizon_mult = std::nextafter(2.0, 3.0);
    EXPECT_EQ(parse_config(emit_config(odd)), odd);
    EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(Config, RejectsUnknownKeys) {
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\ngamma_typo = 2\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\n[sim]\nreplication = 2\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\n[simulation]\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\ninnovation = { kind = \"gaussian\", mu = -1, sd = 1 }\n"); }),
              ErrorKind::ConfigError);
    try {
        parse_config("gamma = 1.0\n[sim]\nreplication = 2\n");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("sim.replication"), std::string::npos) << e.what();
    }
}

TEST(Config, DuplicatesAndSyntaxCarryLineNumbers) {
    for (const auto& [text, line] : std::vector<std::pair<std::string, std::string>>{
             {"gamma = 1.0\n\ngamma = 2.0\n", "line 3"},
             {"gamma = 1.0\n[sim]\nseed = 1\n[sim]\n", "line 4"},
             {"gamma = 1.0\nphi_poly = [1.0,\n", "line 3"},
             {"gamma = 1.0\ntheta_poly = = 2\n", "line 2"},
         }) {
        try {
            parse_document(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
            EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
        }
    }
}

TEST(Config, ValueValidation) {
    EXPECT_EQ(kind_of([] { parse_config("innovation = { kind = \"gaussian\", mu = -1, sigma = 1 }\n"); }),
              ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = -1.0\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\n[sim]\nreplications = 0\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = 1.0\n[sim]\nseed = -3\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { parse_config("gamma = \"one\"\n"); }), ErrorKind::ConfigError);
}

TEST(Hash, Fnv1a) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(CmdCoeffs, Examples) {
    auto cfg = parse_config("gamma = 1.0\n");
    auto rows = csv_rows(cli::coeffs_csv(cfg, 20));
    ASSERT_EQ(rows.size(), 21u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"i", "g_i", "s_i", "density_ratio", "sum_ratio"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(std::stod(rows[i][1]), 1.0);
        EXPECT_EQ(std::stod(rows[i][2]), static_cast<double>(i - 1));
    }
    cfg.g.gamma = 2.0;
    rows = csv_rows(cli::coeffs_csv(cfg, 20));
    EXPECT_EQ(rows[10][0], "9");
    EXPECT_EQ(std::stod(rows[10][1]), 10.0);
    cfg.g.gamma = 0.5;
    rows = csv_rows(cli::coeffs_csv(cfg, 20));
    EXPECT_EQ(rows[4][0], "3");
    EXPECT_EQ(std::stod(rows[4][1]), 0.3125);
}

TEST(CmdSolve, Examples) {
    const auto j = cli::solve_json(parse_config(kGaussian1));
    EXPECT_EQ(j["case"], "A");
    EXPECT_NEAR(j["theta"].get<double>(), 2.0, 1e-10);
    EXPECT_NEAR(j["tau"].get<double>(), 1.0, 1e-6);
    EXPECT_NEAR(j["A"].get<double>(), 2.0, 1e-6);

    EXPECT_EQ(kind_of([] { cli::solve_json(parse_config("gamma = 0.4\n")); }), ErrorKind::Unsupported);
    EXPECT_EQ(exit_code_for(ErrorKind::Unsupported), 2);

    const auto c = cli::solve_json(parse_config(
        "gamma = 0.75\ninnovation = { kind = \"weibull\", alpha = 1.25, mu = -1.0, scale = 1.0 }\n"));
    EXPECT_EQ(c["case"], "C");
    GFunction g;
    g.gamma = 0.75;
    const double norm = ell_beta_norm(g, 5.0, 1e-12).value;
    EXPECT_NEAR(c["g_beta_norm"].get<double>(), norm, 1e-8);
    EXPECT_NEAR(c["theta_c"].get<double>(), std::pow(norm, -1.25), 1e-8);
    EXPECT_TRUE(c["tau"].is_null());
}

TEST(CmdScenario, EmptyGridIsError) {
    cli::ScenarioOptions opts;
    opts.grid_points = 0;
    EXPECT_EQ(kind_of([&] { cli::scenario_csv(parse_config(kGaussian1), opts); }), ErrorKind::InvalidArgument);
}

TEST(CmdScenario, GammaOnePassesThroughOne) {
    cli::ScenarioOptions opts;
    opts.grid_max = 2.0;
    opts.grid_points = 5;
    const auto rows = csv_rows(cli::scenario_csv(parse_config(kGaussian1), opts));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"table", "gamma", "x", "y", "tilted_mean"}));
    bool seen = false;
    for (const auto& r : rows) {
        if (r[0] == "path" && std::stod(r[2]) == 1.0) {
            EXPECT_NEAR(std::stod(r[3]), 1.0, 1e-8);
            seen = true;
        }
    }
    EXPECT_TRUE(seen);
}

TEST(CmdScenario, FigureHasThreeCurves) {
    cli::ScenarioOptions opts;
    opts.figure = true;
    const auto rows = csv_rows(cli::scenario_csv(parse_config(kGaussian1), opts));
    std::size_t path_rows = 0;
    for (const auto& r : rows) path_rows += r[0] == "path";
    EXPECT_EQ(path_rows, 3 * opts.grid_points);
}

TEST(CmdSimulate, FixedSeedIsByteIdentical) {
    auto cfg = parse_config(kGaussian1);
    cfg.sim.replications = 5000;
    cfg.sim.t_levels = {3.0, 5.0};
    const auto a = cli::run_simulate(cfg);
    const auto b = cli::run_simulate(cfg);
    EXPECT_EQ(a.report.dump(2), b.report.dump(2));
    EXPECT_EQ(a.csv, b.csv);
    cfg.sim.threads = 4;
    EXPECT_EQ(cli::run_simulate(cfg).report.dump(2), a.report.dump(2));
}

TEST(CmdSimulate, UnitWalkAtSixRate) {
    const auto out = cli::run_simulate(parse_config(kGaussian1));
    ASSERT_EQ(out.results.size(), 1u);
    const auto& r = out.results[0];
    ASSERT_TRUE(r.log_p.has_value());
    const double ratio = *r.log_p / r.v_t;
    EXPECT_GE(ratio, -2.1);
    EXPECT_LE(ratio, -1.9);
}

TEST(CmdSimulate, ZeroHitsCrude) {
    auto cfg = parse_config(kGaussian1);
    cfg.sim.estimator = Estimator::Crude;
    cfg.sim.replications = 100;
    cfg.sim.t_levels = {40.0};
    const auto out = cli::run_simulate(cfg);
    const auto& res = out.report["results"][0];
    EXPECT_TRUE(res["log_p"].is_null());
    EXPECT_EQ(res["hits"], 0);
    bool warned = false;
    for (const auto& w : res["warnings"]) warned |= w.get<std::string>().rfind("ZeroHits", 0) == 0;
    EXPECT_TRUE(warned);
}

TEST(CmdSimulate, ManifestIgnoresThreadsAndOutputs) {
    auto cfg = parse_config(kGaussian1);
    const auto m1 = cli::manifest(cfg);
    cfg.sim.threads = 8;
    cfg.outputs.json = "elsewhere.json";
    EXPECT_EQ(cli::manifest(cfg)["config_hash"], m1["config_hash"]);
    cfg.sim.seed = 43;
    EXPECT_NE(cli::manifest(cfg)["config_hash"], m1["config_hash"]);
    EXPECT_EQ(m1["seed"], 42);
    EXPECT_EQ(m1["tool"], "gf-ruin");
    EXPECT_EQ(m1["config_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
    // The embedded config text reproduces the run.
    EXPECT_EQ(parse_config(m1["config"].get<std::string>()).sim, parse_config(kGaussian1).sim);
}

TEST(CmdValidate, AllOraclesPass) {
    for (const auto& line : cli::run_validation()) EXPECT_TRUE(line.pass) << line.name << ": " << line.detail;
}

TEST(Binary, ExitCodes) {
    const auto good = write_file("good.toml", kGaussian1);
    const auto bad = write_file("bad.toml", "gamma = 1.0\nbogus = 1\n");
    const auto unsupported = fs::path(GFRUIN_SOURCE_DIR) / "configs" / "unsupported.toml";
    EXPECT_EQ(run_binary("coeffs -c '" + good.string() + "' -n 5"), 0);
    EXPECT_EQ(run_binary("solve -c '" + good.string() + "'"), 0);
    EXPECT_EQ(run_binary("solve -c '" + unsupported.string() + "'"), 2);
    EXPECT_EQ(run_binary("scenario -c '" + good.string() + "' --grid-points 0"), 3);
    EXPECT_EQ(run_binary("solve -c '" + bad.string() + "'"), 4);
    EXPECT_EQ(run_binary("solve -c /nonexistent/config.toml"), 4);
    EXPECT_EQ(run_binary("solve --no-such-flag"), 4);
}

TEST(Binary, ThreadsEnvironmentOverride) {
    const auto cfg = write_file("env.toml", kGaussian1);
    const auto j1 = scratch_dir() / "env1.json", j3 = scratch_dir() / "env3.json";
    const std::string base = "simulate -c '" + cfg.string() + "' --replications 3000 --t 4 --json ";
    EXPECT_EQ(run_binary(base + "'" + j1.string() + "'", "GF_RUIN_THREADS=1"), 0);
    EXPECT_EQ(run_binary(base + "'" + j3.string() + "'", "GF_RUIN_THREADS=3"), 0);
    EXPECT_FALSE(read_file(j1).empty());
    EXPECT_EQ(read_file(j1), read_file(j3));
    EXPECT_EQ(run_binary(base + "-", "GF_RUIN_THREADS=many"), 4);
    EXPECT_EQ(run_binary(base + "- --threads 2", "GF_RUIN_THREADS=many"), 0);
}

#include "gfruin/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <boost/version.hpp>
#include <Eigen/Core>
#include <fftw3.h>

#include "gfruin/errors.hpp"
#include "gfruin/scenario.hpp"

#ifndef GFRUIN_VERSION
#define GFRUIN_VERSION "0.0.0"
#endif

namespace gfruin::cli {

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string csv_num(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

json bins_to_json(const std::vector<Bin>& bins) {
    json a = json::array();
    for (const auto& b : bins) {
        a.push_back({{"center", b.center}, {"mean", finite_or_null(b.mean)}, {"weight_sum", b.weight_sum}});
    }
    return a;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string version() { return GFRUIN_VERSION; }

std::string coeffs_csv(const RunConfig& cfg, std::size_t n) {
    cfg.g.validate();
    CoeffStream stream = taylor_coeffs(cfg.g, n + 1);
    std::ostringstream o;
    o << "i,g_i,s_i,density_ratio,sum_ratio\n";
    for (std::size_t i = 0; i < n; ++i) {
        o << i << ',' << csv_num(stream.coeff(i)) << ',' << csv_num(stream.partial_sum(i)) << ',';
        if (i >= 1) {
            const auto r = asymptotics_check(stream, i);
            o << csv_num(r.density_ratio) << ',' << csv_num(r.sum_ratio);
        } else {
            o << ',';
        }
        o << '\n';
    }
    return o.str();
}

json solution_to_json(const LdpSolution& sol) {
    json j;
    j["case"] = to_string(sol.case_tag);
    j["gamma"] = sol.gamma;
    j["theta"] = finite_or_null(sol.theta);
    if (sol.case_tag == CaseTag::CaseA) {
        j["tau"] = finite_or_null(sol.tau);
        j["A"] = finite_or_null(sol.A);
        j["g_beta_norm"] = nullptr;
        j["non_unique_minimum"] = sol.non_unique_minimum;
        j["residuals"] = {
            {"stationarity", sol.residuals.stationarity},
            {"tilt_equation", sol.residuals.tilt_equation},
            {"local_min_margin", sol.residuals.local_min_margin},
            {"bracket_width", sol.residuals.bracket_width},
            {"golden_iterations", sol.residuals.golden_iterations},
        };
    } else {
        j["theta_c"] = finite_or_null(sol.theta);
        j["tau"] = nullptr;
        j["A"] = nullptr;
        j["g_beta_norm"] = finite_or_null(sol.g_beta_norm);
        j["alpha"] = sol.alpha;
        j["beta"] = sol.beta;
    }
    j["warnings"] = sol.warnings;
    return j;
}

json solve_json(const RunConfig& cfg) {
    const InnovationModel model(cfg.innovation);
    return solution_to_json(solve(cfg.g, model));
}

std::string scenario_csv(const RunConfig& cfg, const ScenarioOptions& opts) {
    if (opts.grid_points == 0) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");
    const InnovationModel model(cfg.innovation);
    std::vector<double> gammas = opts.gammas;
    if (opts.figure) gammas = {2.0 / 3.0, 1.0, 2.0};
    if (gammas.empty()) gammas = {cfg.g.gamma};

    std::vector<LdpSolution> sols;
    double tau_max = 0.0;
    for (double gm : gammas) {
        sols.push_back(solve_theta_case_a(model, gm));
        tau_max = std::max(tau_max, sols.back().tau);
    }
    const double hi = opts.grid_max.value_or(3.0 * tau_max);
    if (!(hi > 0.0)) throw Error(ErrorKind::InvalidArgument, "grid_max must be positive");
    const auto grid = linear_grid(hi, opts.grid_points);

    double t = 10.0;
    if (opts.t) t = *opts.t;
    else if (!cfg.sim.t_levels.empty()) t = cfg.sim.t_levels.front();

    std::ostringstream o;
    o << "table,gamma,x,y,tilted_mean\n";
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        const auto& s = sols[k];
        for (double l : grid) {
            o << "path," << format_double(gammas[k]) << ',' << format_double(l) << ','
              << csv_num(most_likely_path(model, s.gamma, s.tau, s.A, l)) << ",\n";
        }
    }
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        GFunction g = cfg.g;
        g.gamma = gammas[k];
        const auto sched = build_tilt_schedule(g, model, sols[k], t, opts.force);
        for (const auto& row : tilt_profile(sched, model, 2 * sched.horizon)) {
            o << "tilt," << format_double(gammas[k]) << ',' << format_double(row.v) << ','
              << csv_num(row.lambda) << ',' << csv_num(row.tilted_mean) << '\n';
        }
    }
    return o.str();
}

json result_to_json(const EstimateResult& r, bool include_samples) {
    json j;
    j["estimator"] = to_string(r.estimator);
    j["t"] = r.t;
    j["v_t"] = r.v_t;
    j["tau"] = r.tau;
    j["path_length"] = r.path_length;
    j["replications"] = r.replications;
    j["p_hat"] = r.p_hat;
    j["log_p"] = r.log_p ? json(*r.log_p) : json(nullptr);
    j["std_err"] = r.std_err;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["hits"] = r.hits;
    j["weight_overflow"] = r.weight_overflow;
    j["ess"] = r.ess;
    j["late_crossing_fraction"] = r.late_crossing_fraction;
    j["median_n_t"] = r.median_n_t ? json(*r.median_n_t) : json(nullptr);
    if (include_samples) {
        j["n_t_samples"] = r.n_t_samples;
        j["n_t_weights"] = r.n_t_weights;
    }
    j["path_bins"] = bins_to_json(r.path_bins);
    j["innov_bins"] = bins_to_json(r.innov_bins);
    j["warnings"] = r.warnings;
    return j;
}

json manifest(const RunConfig& cfg) {
    RunConfig hashed = cfg;
    hashed.outputs = {};
    const std::string text = emit_config(hashed, false);
    json j;
    j["tool"] = "gf-ruin";
    j["version"] = version();
    j["config_hash"] = "fnv1a64:" + hex64(fnv1a64(text));
    j["config"] = text;
    j["seed"] = cfg.sim.seed;
    j["libraries"] = {
        {"boost", std::string(BOOST_LIB_VERSION)},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"fftw", std::string(fftw_version)},
    };
    return j;
}

SimulateOutput run_simulate(const RunConfig& cfg, bool force, bool include_samples) {
    cfg.g.validate();
    cfg.sim.validate();
    if (cfg.sim.t_levels.empty()) throw Error(ErrorKind::ConfigError, "sim.t_levels is empty");
    const InnovationModel model(cfg.innovation);
    const bool tilted = cfg.sim.estimator == Estimator::Tilted;

    std::optional<LdpSolution> sol;
    std::vector<std::string> warnings;
    try {
        sol = solve(cfg.g, model);
    } catch (const Error& e) {
        if (tilted) throw;
        warnings.push_back(std::string("NoScenario: ") + e.what());
    }
    const bool case_a = sol && sol->case_tag == CaseTag::CaseA;
    if (!tilted && !case_a) warnings.push_back("NoScenario: diagnostics use tau = 1 and carry no targets");

    CoeffStream stream(cfg.g);
    SimulateOutput out;
    out.report["manifest"] = manifest(cfg);
    out.report["solution"] = sol ? solution_to_json(*sol) : json(nullptr);
    out.report["results"] = json::array();
    std::ostringstream csv;
    csv << "t,table,index,center,value,weight_sum,target\n";

    for (double t : cfg.sim.t_levels) {
        EstimateResult r;
        if (tilted) {
            const auto sched = build_tilt_schedule(stream, model, *sol, t, force);
            const Frame frame = frame_of(sched);
            const std::size_t n = path_length(frame, cfg.sim);
            stream.extend_to(n);
            r = estimate_tilted(stream.coeffs().first(n), model, sched, cfg.sim);
        } else {
            Frame frame;
            frame.t = t;
            const double v = t > 0.0 ? scale_v(stream, -1.0, t) : 0.0;
            frame.v_t = v > 0.0 ? v : 1.0;
            frame.tau = case_a ? sol->tau : 1.0;
            const std::size_t n = path_length(frame, cfg.sim);
            stream.extend_to(n);
            r = estimate_crude(stream.coeffs().first(n), model, frame, cfg.sim);
        }

        json jr = result_to_json(r, include_samples);
        if (case_a && r.log_p) {
            jr["log_p_over_v"] = *r.log_p / r.v_t;
            jr["rate_ratio"] = -*r.log_p / (sol->theta * r.v_t);
        } else {
            jr["log_p_over_v"] = nullptr;
            jr["rate_ratio"] = nullptr;
        }
        out.report["results"].push_back(std::move(jr));

        for (std::size_t i = 0; i < r.path_bins.size(); ++i) {
            const auto& b = r.path_bins[i];
            const double target =
                case_a ? most_likely_path(model, sol->gamma, sol->tau, sol->A, b.center) : NAN;
            csv << format_double(t) << ",path," << i << ',' << format_double(b.center) << ','
                << csv_num(b.mean) << ',' << csv_num(b.weight_sum) << ',' << csv_num(target) << '\n';
        }
        for (std::size_t i = 0; i < r.innov_bins.size(); ++i) {
            const auto& b = r.innov_bins[i];
            const double target =
                case_a ? model.mean_fn(sol->A * k_gamma(sol->gamma, b.center / sol->tau)) : NAN;
            csv << format_double(t) << ",innov," << i << ',' << format_double(b.center) << ','
                << csv_num(b.mean) << ',' << csv_num(b.weight_sum) << ',' << csv_num(target) << '\n';
        }
        out.results.push_back(std::move(r));
    }
    out.report["warnings"] = warnings;
    out.csv = csv.str();
    return out;
}

double enumerate_two_point(std::span<const double> g, const TwoPointSpec& law, double t) {
    const std::size_t n = g.size();
    if (n == 0 || n > 20) throw Error(ErrorKind::InvalidArgument, "enumeration needs 1 <= n <= 20");
    double total = 0.0;
    std::vector<double> x(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double mass = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool up = (mask >> i) & 1u;
            x[i] = up ? law.hi : law.lo;
            mass *= up ? law.p : 1.0 - law.p;
        }
        // x[i] is X_{i+1}; S_k = sum_{j<k} g_j X_{k-j}
        bool hit = false;
        for (std::size_t k = 1; k <= n && !hit; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += g[j] * x[k - j - 1];
            hit = s > t;
        }
        if (hit) total += mass;
    }
    return total;
}

namespace {

ValidationLine check(std::string name, double err, double tol) {
    std::ostringstream d;
    d << "max error " << err << " (tol " << tol << ")";
    return {std::move(name), err <= tol, d.str()};
}

}  // namespace

std::vector<ValidationLine> run_validation() {
    std::vector<ValidationLine> lines;
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            lines.push_back(fn());
        } catch (const std::exception& e) {
            lines.push_back({name, false, e.what()});
        }
    };
    const auto unit = InnovationModel::gaussian(-1.0, 1.0);
    const std::vector<double> gammas{0.75, 1.0, 1.5, 2.0};

    guarded("gaussian_conjugate", [&] {
        double err = 0.0;
        for (double gm : gammas) {
            for (int k = 0; k <= 10; ++k) {
                const double a = 0.5 * k;
                const double exact = (a + 1.0) * (a + 1.0) * (2.0 * gm - 1.0) / (2.0 * gm * gm);
                err = std::max(err, std::abs(conjugate_J(unit, gm, a) - exact));
            }
        }
        return check("gaussian_conjugate", err, 1e-6);
    });

    guarded("gaussian_theta_tau_A", [&] {
        double err = 0.0;
        for (double gm : gammas) {
            const auto s = solve_theta_case_a(unit, gm);
            err = std::max(err, std::abs(s.theta - 2.0 * std::pow(2.0 * gm - 1.0, 1.0 / gm - 1.0)));
            err = std::max(err, std::abs(s.tau - std::pow(2.0 * gm - 1.0, 1.0 / gm)));
            err = std::max(err, std::abs(s.A - 2.0 / gm));
        }
        return check("gaussian_theta_tau_A", err, 1e-6);
    });

    guarded("path_identity", [&] {
        double err = 0.0;
        for (double gm : {2.0 / 3.0, 1.0, 2.0}) {
            const auto s = solve_theta_case_a(unit, gm);
            err = std::max(err, std::abs(most_likely_path(unit, gm, s.tau, s.A, s.tau) - 1.0));
        }
        return check("path_identity", err, 1e-8);
    });

    guarded("scaling_laws", [&] {
        double err = 0.0;
        for (double gm : {0.75, 1.0, 2.0}) {
            const auto base = solve_theta_case_a(unit, gm);
            const auto wide = solve_theta_case_a(unit.scaled(2.0), gm);
            err = std::max(err, std::abs(wide.theta - base.theta / std::pow(2.0, 1.0 / gm)));
            for (double mu : {-0.5, -2.0}) {
                const double c = -mu;
                const auto scaled_model = unit.scaled(c);
                const auto sc = solve_theta_case_a(scaled_model, gm);
                err = std::max(err, std::abs(sc.A - base.A / c));
                err = std::max(err, std::abs(sc.tau - std::pow(c, -1.0 / gm) * base.tau));
                for (double a : {0.0, 1.0, 2.5}) {
                    err = std::max(err, std::abs(conjugate_J(scaled_model, gm, a) - conjugate_J(unit, gm, a / c)));
                }
            }
        }
        return check("scaling_laws", err, 1e-6);
    });

    guarded("lundberg_two_point", [&] {
        // gamma = 1: theta is the positive root of log phi.
        const auto model = InnovationModel::two_point(0.3, -2.0, 1.0);
        const auto s = solve_theta_case_a(model, 1.0);
        return check("lundberg_two_point", std::abs(model.log_mgf(s.theta)), 1e-8);
    });

    guarded("enumeration_unbiasedness", [&] {
        std::mt19937_64 gen(20240607);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        int worst_instance = -1;
        double worst_z = 0.0;
        int done = 0;
        while (done < 20) {
            const std::size_t n = 2 + static_cast<std::size_t>(u01(gen) * 11.0);
            std::vector<double> g(n);
            for (auto& c : g) c = 0.2 + 1.3 * u01(gen);
            const TwoPointSpec law{0.2 + 0.4 * u01(gen), -1.0, 1.0};
            double total = 0.0;
            for (double c : g) total += c;
            const double t = 0.5 + 0.6 * total * u01(gen);
            const double exact = enumerate_two_point(g, law, t);
            if (exact <= 0.0 || exact >= 1.0) continue;
            std::vector<double> lambdas(n);
            for (auto& l : lambdas) l = 1.5 * u01(gen);
            const auto sched = make_schedule(lambdas, t, 1.0);
            SimConfig sc;
            sc.replications = 20000;
            sc.seed = 1000 + static_cast<std::uint64_t>(done);
            sc.path_length = n;
            const auto r = estimate_tilted(g, InnovationModel(law), sched, sc);
            const double z = r.std_err > 0.0 ? std::abs(r.p_hat - exact) / r.std_err
                                             : (r.p_hat == exact ? 0.0 : INFINITY);
            if (z > worst_z) {
                worst_z = z;
                worst_instance = done;
            }
            ++done;
        }
        std::ostringstream d;
        d << "worst |z| " << worst_z << " at instance " << worst_instance << " (tol 4)";
        return ValidationLine{"enumeration_unbiasedness", worst_z <= 4.0, d.str()};
    });

    guarded("zero_tilt_equals_crude", [&] {
        const std::vector<double> g{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
        const auto model = InnovationModel::gaussian(-1.0, 1.0);
        const auto sched = make_schedule(std::vector<double>(g.size(), 0.0), 2.0, 2.0);
        SimConfig sc;
        sc.path_length = g.size();
        const Frame frame = frame_of(sched);
        std::size_t mismatches = 0;
        for (std::size_t r = 0; r < 200; ++r) {
            const auto a = trace_replication(g, model, &sched, frame, sc, r);
            const auto b = trace_replication(g, model, nullptr, frame, sc, r);
            if (a.x != b.x || a.s != b.s || a.log_weight != 0.0) ++mismatches;
        }
        return ValidationLine{"zero_tilt_equals_crude", mismatches == 0,
                              std::to_string(mismatches) + " of 200 replications differ"};
    });

    guarded("case_c_allocation", [&] {
        GFunction g;
        g.gamma = 0.75;
        const double alpha = 1.25;
        const double beta = alpha / (alpha - 1.0);
        CoeffStream s = taylor_coeffs(g, 4096);
        const auto x = case_c_allocation(s.coeffs(), alpha);
        double lhs = 0.0, constraint = 0.0, power = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            lhs += std::pow(x[i], alpha);
            constraint += s.coeff(i) * x[i];
            power += std::pow(s.coeff(i), beta);
        }
        const double rhs = std::pow(power, -alpha / beta);
        const double err = std::max(std::abs(lhs - rhs) / rhs, std::abs(constraint - 1.0));
        return check("case_c_allocation", err, 1e-10);
    });

    return lines;
}

}  // namespace gfruin::cli

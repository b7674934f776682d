#include "gfruin/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gfruin/errors.hpp"
#include "gfruin/numerics.hpp"

namespace gfruin {

double solve_A(const InnovationModel& model, double gamma, double tau) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    const double target = std::pow(tau, -gamma);
    auto g = [&](double a) { return integrated_mean(model, gamma, a) - target; };
    if (g(0.0) > 0.0) {
        throw Error(ErrorKind::NoRoot, "tilt equation: left side already exceeds tau^{-gamma} at A = 0");
    }
    if (target >= model.mean_fn_sup()) {
        throw Error(ErrorKind::NoRoot, "tilt equation: tau^{-gamma} outside the image of m");
    }
    const double hi = numerics::expand_upper(g, 1.0);
    const double A = numerics::safeguarded_newton(
        [&](double a) { return std::pair{g(a), integrated_mean_deriv(model, gamma, a)}; }, 0.0, hi);
    const double residual = std::abs(g(A));
    if (!(residual <= 1e-8 * std::max(1.0, target))) {
        throw Error(ErrorKind::NoRoot,
                    "tilt equation residual " + std::to_string(residual) + " exceeds 1e-8");
    }
    return A;
}

double most_likely_path(const InnovationModel& model, double gamma, double tau, double A,
                        double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    if (lambda == 0.0) return 0.0;
    const double mu = model.mean();
    const double excess = std::max(0.0, lambda - tau);
    if (gamma == 1.0) return model.mean_fn(A) * std::min(lambda, tau) + mu * excess;

    const double upper = std::min(lambda, tau);
    const bool before = lambda <= tau;
    // dr = upper - v, accurate near the upper endpoint where either
    // (lambda - v)^{gamma-1} or k_gamma(v / tau) is singular.
    auto f = [&](double, double, double dr) {
        const double lag = before ? dr : excess + dr;
        const double rest = before ? (tau - lambda) + dr : dr;
        const double k = gamma * std::pow(rest / tau, gamma - 1.0);
        return gamma * std::pow(lag, gamma - 1.0) * model.mean_fn(A * k);
    };
    const double head = numerics::integrate_endpoint_singular(f, 0.0, upper);
    return head + mu * std::pow(excess, gamma);
}

namespace {

double tilt_cap(const InnovationModel& model, double gamma, double tau) {
    const double level = 10.0 * std::max(1.0, std::pow(tau, -gamma)) * (-model.mean());
    if (level >= model.mean_fn_sup()) return std::numeric_limits<double>::infinity();
    return model.mean_fn_inv(level);
}

}  // namespace

TiltSchedule build_tilt_schedule(CoeffStream& stream, const InnovationModel& model,
                                 const LdpSolution& sol, double t, bool force) {
    if (sol.case_tag != CaseTag::CaseA) {
        throw Error(ErrorKind::WrongRegime, "tilt schedules exist for case A only");
    }
    if (sol.non_unique_minimum && !force) {
        throw Error(ErrorKind::WrongRegime,
                    "NonUniqueMinimum: refusing to build a schedule without force");
    }
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");

    TiltSchedule s;
    s.t = t;
    s.gamma = sol.gamma;
    s.tau = sol.tau;
    s.A = sol.A;
    s.v_t = scale_v(stream, -1.0, t);
    const double end = s.tau * s.v_t;
    s.horizon = static_cast<std::size_t>(std::ceil(end));
    s.lambda_cap = tilt_cap(model, s.gamma, s.tau);
    s.lambdas.resize(s.horizon);
    for (std::size_t i = 1; i <= s.horizon; ++i) {
        double l = s.A * k_gamma(s.gamma, static_cast<double>(i) / end);
        if (l > s.lambda_cap) {
            l = s.lambda_cap;
            ++s.capped_count;
        }
        s.lambdas[i - 1] = l;
    }
    if (s.capped_count > 0) {
        s.warnings.push_back("TiltCapped: " + std::to_string(s.capped_count) +
                             " tilts clipped to lambda_cap");
    }
    if (sol.non_unique_minimum) s.warnings.push_back("NonUniqueMinimum: schedule forced");
    return s;
}

TiltSchedule build_tilt_schedule(const GFunction& g, const InnovationModel& model,
                                 const LdpSolution& sol, double t, bool force) {
    g.validate();
    CoeffStream stream(g);
    return build_tilt_schedule(stream, model, sol, t, force);
}

TiltSchedule make_schedule(std::vector<double> lambdas, double t, double v_t) {
    if (!(v_t > 0.0)) throw Error(ErrorKind::InvalidArgument, "v_t must be positive");
    for (double l : lambdas) {
        if (!(l >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tilts must be nonnegative");
    }
    TiltSchedule s;
    s.t = t;
    s.v_t = v_t;
    s.horizon = lambdas.size();
    s.tau = s.horizon > 0 ? static_cast<double>(s.horizon) / v_t : 1.0;
    s.lambdas = std::move(lambdas);
    s.lambda_cap = std::numeric_limits<double>::infinity();
    return s;
}

std::vector<TiltProfileRow> tilt_profile(const TiltSchedule& schedule, const InnovationModel& model,
                                         std::size_t n_max) {
    std::vector<TiltProfileRow> rows;
    rows.reserve(n_max);
    for (std::size_t i = 1; i <= n_max; ++i) {
        TiltProfileRow r;
        r.i = i;
        r.v = static_cast<double>(i) / schedule.v_t;
        r.lambda = schedule.lambda(i);
        r.tilted_mean = model.mean_fn(r.lambda);
        rows.push_back(r);
    }
    return rows;
}

std::vector<PathRow> figure_data(const InnovationModel& model, const std::vector<double>& gammas,
                                 const std::vector<double>& grid) {
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");
    if (gammas.empty()) throw Error(ErrorKind::InvalidArgument, "empty gamma list");
    std::vector<PathRow> rows;
    rows.reserve(grid.size() * gammas.size());
    for (double gamma : gammas) {
        const auto sol = solve_theta_case_a(model, gamma);
        for (double lambda : grid) {
            rows.push_back({gamma, sol.tau, lambda,
                            most_likely_path(model, gamma, sol.tau, sol.A, lambda)});
        }
    }
    return rows;
}

std::vector<double> linear_grid(double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {0.0};
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

bool is_unimodal(const std::vector<double>& values, double slack) {
    if (values.size() < 3) return true;
    const auto peak = std::max_element(values.begin(), values.end()) - values.begin();
    for (std::ptrdiff_t i = 1; i <= peak; ++i) {
        if (values[i] < values[i - 1] - slack) return false;
    }
    for (std::size_t i = static_cast<std::size_t>(peak) + 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1] + slack) return false;
    }
    return peak > 0 && static_cast<std::size_t>(peak) + 1 < values.size();
}

}  // namespace gfruin

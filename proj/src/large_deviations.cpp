#include "gfruin/large_deviations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "gfruin/errors.hpp"
#include "gfruin/numerics.hpp"

namespace gfruin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
    }
}

// int_0^1 h(gamma v^{gamma-1}) w(v) dv with w = kernel power; v = 1 - u.
template <class H>
double kernel_integral(double gamma, H&& h) {
    if (gamma == 1.0) return h(1.0);
    auto f = [&](double, double dl, double) { return h(gamma * std::pow(dl, gamma - 1.0)); };
    return numerics::integrate_endpoint_singular(f, 0.0, 1.0);
}

// v log phi(lambda gamma v^{gamma-1}) along v -> 0; growth means the
// integrand is not integrable at the kernel singularity.
bool tail_diverges(const InnovationModel& model, double gamma, double lambda) {
    if (gamma >= 1.0 || lambda == 0.0) return false;
    constexpr std::array<double, 4> kProbe{1e-6, 1e-12, 1e-24, 1e-48};
    std::array<double, 4> q{};
    for (std::size_t i = 0; i < kProbe.size(); ++i) {
        const double v = kProbe[i];
        const double lm = model.log_mgf(lambda * gamma * std::pow(v, gamma - 1.0));
        if (!std::isfinite(lm)) return true;
        q[i] = v * lm;
    }
    return q[0] > 0.0 && q[1] > q[0] && q[2] > q[1] && q[3] > q[2] && q[3] > 1.0;
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || std::isnan(lambda)) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
    }
}

}  // namespace

std::string to_string(CaseTag tag) {
    switch (tag) {
        case CaseTag::CaseA: return "A";
        case CaseTag::CaseC: return "C";
        case CaseTag::Unsupported: return "Unsupported";
    }
    return "Unsupported";
}

double integrated_log_mgf(const InnovationModel& model, double gamma, double lambda) {
    check_gamma(gamma);
    check_lambda(lambda);
    if (lambda == 0.0) return 0.0;
    if (tail_diverges(model, gamma, lambda)) {
        throw Error(ErrorKind::DivergentIntegral,
                    "integrated log-MGF diverges at the kernel singularity");
    }
    const double value = kernel_integral(gamma, [&](double k) { return model.log_mgf(lambda * k); });
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::DivergentIntegral, "integrated log-MGF is not finite");
    }
    return value;
}

double integrated_mean(const InnovationModel& model, double gamma, double lambda) {
    check_gamma(gamma);
    check_lambda(lambda);
    if (lambda == 0.0) return model.mean();
    return kernel_integral(gamma, [&](double k) { return k * model.mean_fn(lambda * k); });
}

double integrated_mean_deriv(const InnovationModel& model, double gamma, double lambda) {
    check_gamma(gamma);
    check_lambda(lambda);
    return kernel_integral(gamma,
                           [&](double k) { return k * k * model.mean_fn_deriv(lambda * k); });
}

ConjugatePoint conjugate(const InnovationModel& model, double gamma, double a) {
    check_gamma(gamma);
    if (std::isnan(a)) throw Error(ErrorKind::InvalidArgument, "a is NaN");
    if (a <= model.mean()) return {0.0, 0.0};
    if (a >= model.mean_fn_sup()) return {kInf, kInf};
    if (tail_diverges(model, gamma, 1.0)) {
        throw Error(ErrorKind::DivergentIntegral,
                    "integrated log-MGF diverges at the kernel singularity");
    }
    auto g = [&](double lambda) { return integrated_mean(model, gamma, lambda) - a; };
    const double hi = numerics::expand_upper(g, 1.0);
    const double lambda = numerics::safeguarded_newton(
        [&](double l) {
            return std::pair{g(l), integrated_mean_deriv(model, gamma, l)};
        },
        0.0, hi, 1e-12, 100);
    const double value = a * lambda - integrated_log_mgf(model, gamma, lambda);
    return {std::max(0.0, value), lambda};
}

double conjugate_J(const InnovationModel& model, double gamma, double a) {
    return conjugate(model, gamma, a).value;
}

LdpSolution solve_theta_case_a(const InnovationModel& model, double gamma) {
    check_gamma(gamma);
    if (gamma <= 0.5) throw Error(ErrorKind::Unsupported, "gamma <= 1/2 is not supported");
    if (!(model.mean() < 0.0)) throw Error(ErrorKind::DriftViolation, "innovation mean must be negative");

    auto f = [&](double x) { return x * conjugate_J(model, gamma, std::pow(x, -gamma)); };
    // f'(x) = J(a) - gamma a lambda*(a) with a = x^{-gamma}.
    auto fprime = [&](double x) {
        const double a = std::pow(x, -gamma);
        const auto c = conjugate(model, gamma, a);
        return c.value - gamma * a * c.argmax;
    };

    int best_k = 0;
    double best_f = kInf;
    for (int k = -20; k <= 20; ++k) {
        const double fx = f(std::ldexp(1.0, k));
        if (fx < best_f) {
            best_f = fx;
            best_k = k;
        }
    }
    if (!std::isfinite(best_f) || best_k == -20 || best_k == 20) {
        throw Error(ErrorKind::NoRoot, "no interior minimum of x J(x^{-gamma}) on [2^-20, 2^20]");
    }
    const double lo = std::ldexp(1.0, best_k - 1);
    const double hi = std::ldexp(1.0, best_k + 1);
    const auto golden = numerics::golden_section(f, lo, hi, 1e-8);

    double tau = golden.x;
    if (fprime(lo) < 0.0 && fprime(hi) > 0.0) {
        double blo = golden.lo * (1.0 - 1e-6);
        double bhi = golden.hi * (1.0 + 1e-6);
        if (!(fprime(blo) <= 0.0 && fprime(bhi) >= 0.0)) {
            blo = lo;
            bhi = hi;
        }
        boost::math::tools::eps_tolerance<double> tol(48);
        std::uintmax_t max_iter = 60;
        const auto r = boost::math::tools::toms748_solve(fprime, blo, bhi, tol, max_iter);
        tau = 0.5 * (r.first + r.second);
    }

    LdpSolution sol;
    sol.case_tag = CaseTag::CaseA;
    sol.gamma = gamma;
    sol.theta = f(tau);

    const double flat_tol = 1e-6 * sol.theta;
    auto flat_on = [&](double x0, double x1) {
        return f(x0) - sol.theta <= flat_tol && f(x1) - sol.theta <= flat_tol;
    };
    if (flat_on(0.95 * tau, 1.05 * tau) || flat_on(0.9 * tau, tau) || flat_on(tau, 1.1 * tau)) {
        sol.non_unique_minimum = true;
        sol.warnings.push_back("NonUniqueMinimum: x J(x^{-gamma}) is flat near its minimum; "
                               "reporting the smallest minimizer");
        // Left edge of {f <= theta + flat_tol}.
        double left = tau;
        while (f(left * 0.5) - sol.theta <= flat_tol && left > 1e-300) left *= 0.5;
        tau = numerics::bisect([&](double x) { return flat_tol - (f(x) - sol.theta); },
                               left * 0.5, left, 1e-12);
        sol.theta = std::min(sol.theta, f(tau));
    }

    sol.tau = tau;
    const double a_tau = std::pow(tau, -gamma);
    sol.A = conjugate(model, gamma, a_tau).argmax;
    sol.residuals.stationarity = std::abs(fprime(tau));
    sol.residuals.tilt_equation = std::abs(integrated_mean(model, gamma, sol.A) - a_tau);
    sol.residuals.local_min_margin = std::min(f(0.99 * tau), f(1.01 * tau)) - sol.theta;
    sol.residuals.bracket_width = (golden.hi - golden.lo) / tau;
    sol.residuals.golden_iterations = golden.iterations;
    return sol;
}

double case_c_constant(std::span<const double> coeffs, double alpha) {
    if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must exceed 1");
    const double beta = alpha / (alpha - 1.0);
    return std::pow(ell_beta_norm(coeffs, beta), -alpha);
}

std::vector<double> case_c_allocation(std::span<const double> coeffs, double alpha) {
    if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must exceed 1");
    const double beta = alpha / (alpha - 1.0);
    numerics::CompensatedSum total;
    for (double c : coeffs) total.add(std::pow(c, beta));
    const double denom = total.value();
    if (!(denom > 0.0)) throw Error(ErrorKind::InvalidArgument, "coefficients are all zero");
    std::vector<double> x;
    x.reserve(coeffs.size());
    for (double c : coeffs) x.push_back(std::pow(c, 1.0 / (alpha - 1.0)) / denom);
    return x;
}

LdpSolution solve_case_c(const GFunction& g, const InnovationModel& model, double norm_tol) {
    g.validate();
    const double gamma = g.gamma;
    const auto alpha = model.tail_index();
    if (!alpha) throw Error(ErrorKind::WrongRegime, "innovation law has no Weibull tail index");
    if (!(gamma > 0.5 && gamma < 1.0)) {
        throw Error(ErrorKind::WrongRegime, "case C needs 1/2 < gamma < 1");
    }
    if (!(*alpha > 1.0) || !(*alpha * gamma < 1.0)) {
        throw Error(ErrorKind::WrongRegime, "case C needs 1 < alpha < 1/gamma");
    }
    const double beta = *alpha / (*alpha - 1.0);
    const auto norm = ell_beta_norm(g, beta, norm_tol);

    LdpSolution sol;
    sol.case_tag = CaseTag::CaseC;
    sol.gamma = gamma;
    sol.alpha = *alpha;
    sol.beta = beta;
    sol.g_beta_norm = norm.value;
    sol.theta = std::pow(norm.value, -*alpha);
    sol.residuals.bracket_width = norm.last_change;
    return sol;
}

CaseTag classify_case(const GFunction& g, const InnovationModel& model) {
    const double gamma = g.gamma;
    if (!(gamma > 0.5)) return CaseTag::Unsupported;
    const auto alpha = model.tail_index();
    if (alpha && std::abs(*alpha * gamma - 1.0) <= 1e-12) return CaseTag::Unsupported;
    try {
        integrated_log_mgf(model, gamma, 1.0);
        return CaseTag::CaseA;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DivergentIntegral && e.kind() != ErrorKind::NonFiniteMGF) throw;
    }
    if (alpha && gamma < 1.0 && *alpha > 1.0 && *alpha * gamma < 1.0) return CaseTag::CaseC;
    return CaseTag::Unsupported;
}

LdpSolution solve(const GFunction& g, const InnovationModel& model) {
    g.validate();
    switch (classify_case(g, model)) {
        case CaseTag::CaseA: return solve_theta_case_a(model, g.gamma);
        case CaseTag::CaseC: return solve_case_c(g, model);
        case CaseTag::Unsupported: break;
    }
    throw Error(ErrorKind::Unsupported,
                "unsupported regime: requires gamma > 1/2 and alpha gamma != 1");
}

}  // namespace gfruin

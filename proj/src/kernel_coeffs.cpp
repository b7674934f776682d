#include "gfruin/kernel_coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

#include "gfruin/errors.hpp"

namespace gfruin {

namespace {

double poly_eval(const std::vector<double>& p, double x) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double poly_abs_sum(const std::vector<double>& p) {
    double s = 0.0;
    for (double c : p) s += std::abs(c);
    return s;
}

// Number of times (1 - x) divides p, up to round-off.
int multiplicity_at_one(std::vector<double> p) {
    int mult = 0;
    while (p.size() > 1 && std::abs(poly_eval(p, 1.0)) <= 1e-14 * poly_abs_sum(p)) {
        // p(x) = (1 - x) q(x): q_k = sum_{j<=k} p_j
        std::vector<double> q(p.size() - 1);
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            acc += p[k];
            q[k] = acc;
        }
        p = std::move(q);
        ++mult;
    }
    return mult;
}

std::vector<double> trimmed(std::vector<double> p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    return p;
}

}  // namespace

void GFunction::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
    }
    if (theta_poly.empty() || phi_poly.empty()) {
        throw Error(ErrorKind::InvalidArgument, "theta_poly and phi_poly must be nonempty");
    }
    if (phi_poly.front() == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "Phi(0) must not vanish");
    }
    if (std::abs(theta_at(1.0)) <= 1e-14 * poly_abs_sum(theta_poly)) {
        throw Error(ErrorKind::InvalidArgument, "Theta(1) must not vanish");
    }
    if (std::abs(phi_at(1.0)) <= 1e-14 * poly_abs_sum(phi_poly)) {
        throw Error(ErrorKind::InvalidArgument, "Phi(1) must not vanish");
    }
    const auto phi = trimmed(phi_poly);
    if (phi.size() > 1) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(phi.size()));
        for (std::size_t i = 0; i < phi.size(); ++i) c[static_cast<Eigen::Index>(i)] = phi[i];
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(c);
        for (const auto& root : solver.roots()) {
            if (std::abs(root) < 1.0 - 1e-12) {
                throw Error(ErrorKind::InvalidArgument,
                            "Phi has a root inside the unit disk; g is not analytic on (-1, 1)");
            }
        }
    }
}

double GFunction::theta_at(double x) const { return poly_eval(theta_poly, x); }
double GFunction::phi_at(double x) const { return poly_eval(phi_poly, x); }

double GFunction::evaluate(double x) const {
    return std::pow(1.0 - x, -gamma) * theta_at(x) / phi_at(x);
}

double GFunction::effective_gamma() const {
    return gamma - multiplicity_at_one(theta_poly) + multiplicity_at_one(phi_poly);
}

CoeffStream::CoeffStream(GFunction g) : g_(std::move(g)) {
    if (g_.phi_poly.empty() || g_.phi_poly.front() == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "Phi(0) must not vanish");
    }
    if (g_.theta_poly.empty()) {
        throw Error(ErrorKind::InvalidArgument, "theta_poly must be nonempty");
    }
    if (!(g_.gamma > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
    }
}

void CoeffStream::extend_to(std::size_t n) {
    const auto& theta = g_.theta_poly;
    const auto& phi = g_.phi_poly;
    const double gamma = g_.gamma;
    coeffs_.reserve(n);
    partial_sums_.reserve(n + 1);
    while (coeffs_.size() < n) {
        const std::size_t k = coeffs_.size();
        // (1 - x)^{-gamma} = sum b_k x^k
        binom_.push_back(k == 0 ? 1.0
                                : binom_[k - 1] * (static_cast<double>(k) - 1.0 + gamma) /
                                      static_cast<double>(k));
        double c = 0.0;
        for (std::size_t j = 0; j < theta.size() && j <= k; ++j) c += theta[j] * binom_[k - j];
        theta_conv_.push_back(c);
        // Power-series division by Phi.
        double v = theta_conv_[k];
        for (std::size_t j = 1; j < phi.size() && j <= k; ++j) v -= phi[j] * coeffs_[k - j];
        v /= phi[0];

        if (k == 0 && v == 0.0) throw Error(ErrorKind::ZeroG0, "g_0 vanishes");
        max_abs_ = std::max(max_abs_, std::abs(v));
        if (v < -1e-12 * max_abs_) {
            throw Error(ErrorKind::NegativeCoefficient,
                        "g_" + std::to_string(k) + " = " + std::to_string(v) + " is negative");
        }
        if (v < 0.0) v = 0.0;
        coeffs_.push_back(v);
        running_.add(v);
        partial_sums_.push_back(running_.value());
    }
}

CoeffStream taylor_coeffs(const GFunction& g, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
    CoeffStream s(g);
    s.extend_to(n);
    return s;
}

double k_gamma(double gamma, double u) noexcept {
    if (u < 0.0 || u >= 1.0) return 0.0;
    return gamma * std::pow(1.0 - u, gamma - 1.0);
}

double scale_v(CoeffStream& stream, double mu, double t) {
    if (!(mu < 0.0)) throw Error(ErrorKind::InvalidArgument, "mean must be negative");
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");
    const double target = t / (-mu);
    constexpr std::size_t kBudget = std::size_t{1} << 26;
    std::size_t n = std::max<std::size_t>(stream.size(), 64);
    stream.extend_to(n);
    while (stream.partial_sum(stream.size()) <= target) {
        if (stream.size() >= kBudget) {
            throw Error(ErrorKind::DriftViolation,
                        "partial sums do not reach t/(-mu) within the coefficient budget");
        }
        stream.extend_to(std::min(kBudget, stream.size() * 2));
    }
    const auto sums = stream.partial_sums();
    // First index with s_idx > target; s_0 = 0 < target so idx >= 1.
    const auto it = std::upper_bound(sums.begin(), sums.end(), target);
    const auto idx = static_cast<std::size_t>(it - sums.begin());
    const std::size_t lo = idx - 1;
    const double step = stream.coeff(lo);
    return static_cast<double>(lo) + (target - sums[lo]) / step;
}

double scale_v(const GFunction& g, double mu, double t) {
    CoeffStream s(g);
    return scale_v(s, mu, t);
}

double scale_v_asymptotic(const GFunction& g, double mu, double t) {
    const double gamma = g.gamma;
    const double u = std::pow(t * g.phi_at(1.0) / (g.theta_at(1.0) * (-mu)), 1.0 / gamma);
    return std::pow(std::tgamma(1.0 + gamma), 1.0 / gamma) * u;
}

AsymptoticsReport asymptotics_check(CoeffStream& stream, std::size_t n) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
    stream.extend_to(n + 1);
    const auto& g = stream.g();
    const double dn = static_cast<double>(n);
    AsymptoticsReport r;
    r.n = n;
    r.density_ratio = stream.coeff(n) * dn / (g.gamma * stream.partial_sum(n));
    r.sum_ratio = stream.partial_sum(n) * std::tgamma(1.0 + g.gamma) / g.evaluate(1.0 - 1.0 / dn);
    return r;
}

AsymptoticsReport asymptotics_check(const GFunction& g, std::size_t n) {
    CoeffStream s(g);
    return asymptotics_check(s, n);
}

namespace {

// sum_{k >= 0} (q + k)^{-s} for large q by Euler-Maclaurin.
double hurwitz_zeta_tail(double s, double q) {
    // Bernoulli B_2, B_4, B_6, B_8 over (2j)!
    constexpr double kB[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0};
    double sum = std::pow(q, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(q, -s);
    double rising = s;  // s (s+1) ... (s + 2j - 2)
    for (int j = 1; j <= 4; ++j) {
        sum += kB[j - 1] * rising * std::pow(q, -s - 2.0 * j + 1.0);
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
    }
    return sum;
}

}  // namespace

NormResult ell_beta_norm(const GFunction& g, double beta, double tol) {
    if (!(beta > 1.0)) throw Error(ErrorKind::InvalidArgument, "beta must exceed 1");
    const double ge = g.effective_gamma();
    if (!(beta * (1.0 - ge) > 1.0)) {
        throw Error(ErrorKind::DivergentNorm,
                    "beta (1 - gamma) <= 1: the coefficients are not beta-summable");
    }
    CoeffStream stream(g);
    constexpr std::size_t kMaxTerms = std::size_t{1} << 23;
    std::size_t n = 1024;
    numerics::CompensatedSum raw;
    std::size_t summed = 0;
    NormResult prev;
    bool have_prev = false;
    while (true) {
        stream.extend_to(n);
        for (; summed < n; ++summed) raw.add(std::pow(stream.coeff(summed), beta));

        double tail = 0.0;
        if (ge > 0.0) {
            // g_i^{1/(ge-1)} is asymptotically affine in i.
            const std::size_t i1 = n / 2;
            const std::size_t i2 = n - 1;
            const double p = 1.0 / (ge - 1.0);
            const double y1 = std::pow(stream.coeff(i1), p);
            const double y2 = std::pow(stream.coeff(i2), p);
            const double slope = (y2 - y1) / static_cast<double>(i2 - i1);
            if (slope > 0.0 && std::isfinite(slope)) {
                const double shift = y2 / slope - static_cast<double>(i2);
                const double s = beta * (1.0 - ge);
                tail = std::pow(slope, -s) * hurwitz_zeta_tail(s, static_cast<double>(n) + shift);
            }
        }
        NormResult cur;
        cur.terms = n;
        cur.raw_power_sum = raw.value();
        cur.tail_power_sum = tail;
        cur.value = std::pow(cur.raw_power_sum + tail, 1.0 / beta);
        if (have_prev) {
            cur.last_change = std::abs(cur.value - prev.value);
            if (cur.last_change < tol || n >= kMaxTerms) return cur;
        }
        prev = cur;
        have_prev = true;
        n *= 2;
    }
}

double ell_beta_norm(std::span<const double> coeffs, double beta) {
    numerics::CompensatedSum s;
    for (double c : coeffs) s.add(std::pow(std::abs(c), beta));
    return std::pow(s.value(), 1.0 / beta);
}

}  // namespace gfruin

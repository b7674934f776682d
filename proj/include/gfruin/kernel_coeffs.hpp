#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gfruin/numerics.hpp"

namespace gfruin {

/// Weight function g(x) = (1 - x)^{-gamma} Theta(x) / Phi(x).
///
/// Polynomials are stored lowest degree first. `validate()` enforces the
/// conditions needed to use g as the weight of a ruin process:
/// gamma > 0, Phi(0) != 0, Theta(1) != 0, Phi(1) != 0 and no root of Phi
/// strictly inside the unit disk.
struct GFunction {
    std::vector<double> theta_poly{1.0};
    std::vector<double> phi_poly{1.0};
    double gamma = 1.0;

    void validate() const;

    double theta_at(double x) const;
    double phi_at(double x) const;
    /// g(x) for |x| < 1.
    double evaluate(double x) const;

    /// gamma reduced by the multiplicity of x = 1 as a root of Theta and
    /// increased by its multiplicity as a root of Phi.
    double effective_gamma() const;

    bool operator==(const GFunction&) const = default;
};

/// Taylor coefficients g_0, g_1, ... with partial sums s_n = sum_{i<n} g_i.
///
/// Built by a single writer (construction and `extend_to`); afterwards it is
/// read-only and may be shared across threads.
class CoeffStream {
public:
    /// Checks Phi(0) != 0 only; the process-level conditions live in
    /// GFunction::validate.
    explicit CoeffStream(GFunction g);

    /// Make at least n coefficients available.
    void extend_to(std::size_t n);

    std::size_t size() const noexcept { return coeffs_.size(); }
    const GFunction& g() const noexcept { return g_; }
    double coeff(std::size_t i) const { return coeffs_.at(i); }
    /// s_n, defined for 0 <= n <= size().
    double partial_sum(std::size_t n) const { return partial_sums_.at(n); }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<const double> partial_sums() const noexcept { return partial_sums_; }

private:
    GFunction g_;
    std::vector<double> binom_;
    std::vector<double> theta_conv_;
    std::vector<double> coeffs_;
    std::vector<double> partial_sums_{0.0};
    numerics::CompensatedSum running_;
    double max_abs_ = 0.0;
};

/// First n Taylor coefficients of g.
/// Throws NegativeCoefficient if some g_i < -1e-12 max|g_j|, ZeroG0 if g_0 == 0.
CoeffStream taylor_coeffs(const GFunction& g, std::size_t n);

/// gamma (1 - u)^{gamma - 1} on [0, 1), zero on [1, inf).
double k_gamma(double gamma, double u) noexcept;

/// Finite-t time scale: the real n solving (-mu) s_n = t on the piecewise
/// linear interpolation of the partial sums. Extends `stream` as needed.
double scale_v(CoeffStream& stream, double mu, double t);
double scale_v(const GFunction& g, double mu, double t);

/// Asymptotic time scale Gamma(1+gamma)^{1/gamma} (t Phi(1) / (Theta(1) (-mu)))^{1/gamma}.
double scale_v_asymptotic(const GFunction& g, double mu, double t);

struct AsymptoticsReport {
    std::size_t n = 0;
    /// g_n n / (gamma s_n)
    double density_ratio = 0.0;
    /// s_n Gamma(1 + gamma) / g(1 - 1/n)
    double sum_ratio = 0.0;
};

AsymptoticsReport asymptotics_check(const GFunction& g, std::size_t n);
AsymptoticsReport asymptotics_check(CoeffStream& stream, std::size_t n);

struct NormResult {
    double value = 0.0;
    /// Number of coefficients summed exactly.
    std::size_t terms = 0;
    /// sum_{i < terms} g_i^beta
    double raw_power_sum = 0.0;
    /// Estimated sum_{i >= terms} g_i^beta.
    double tail_power_sum = 0.0;
    /// |value(terms) - value(terms / 2)|
    double last_change = 0.0;
};

/// (sum_i g_i^beta)^{1/beta}, summing 2^k terms exactly and estimating the
/// remainder from the power-law decay g_i ~ c (i + d)^{gamma_eff - 1}.
/// Stops once doubling the truncation changes the value by less than tol.
/// Throws DivergentNorm if beta (1 - gamma_eff) <= 1.
NormResult ell_beta_norm(const GFunction& g, double beta, double tol = 1e-10);

/// Exact norm of a finite coefficient sequence.
double ell_beta_norm(std::span<const double> coeffs, double beta);

}  // namespace gfruin

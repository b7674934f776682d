#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfruin/innovation.hpp"
#include "gfruin/kernel_coeffs.hpp"

namespace gfruin {

enum class CaseTag { CaseA, CaseC, Unsupported };

std::string to_string(CaseTag tag);

struct SolverResiduals {
    /// |f'(tau)| for f(x) = x J(x^{-gamma}).
    double stationarity = 0.0;
    /// |int k m(A k) - tau^{-gamma}|
    double tilt_equation = 0.0;
    /// min(f(0.99 tau), f(1.01 tau)) - theta; positive at a strict local minimum.
    double local_min_margin = 0.0;
    /// Final golden-section bracket width relative to tau.
    double bracket_width = 0.0;
    int golden_iterations = 0;
};

struct LdpSolution {
    CaseTag case_tag = CaseTag::CaseA;
    double gamma = 1.0;
    /// CaseA: inf_x x J(x^{-gamma}); CaseC: |g|_beta^{-alpha}.
    double theta = 0.0;
    double tau = 0.0;
    double A = 0.0;
    /// CaseC only.
    double g_beta_norm = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    bool non_unique_minimum = false;
    SolverResiduals residuals;
    std::vector<std::string> warnings;
};

/// int_0^1 log phi(lambda k_gamma(u)) du. For gamma < 1 throws
/// DivergentIntegral when v log phi(lambda gamma v^{gamma-1}) grows as v -> 0.
double integrated_log_mgf(const InnovationModel& model, double gamma, double lambda);

/// First and second lambda-derivatives of the integrated log-MGF:
/// int k m(lambda k) du and int k^2 m'(lambda k) du.
double integrated_mean(const InnovationModel& model, double gamma, double lambda);
double integrated_mean_deriv(const InnovationModel& model, double gamma, double lambda);

struct ConjugatePoint {
    double value = 0.0;
    /// Maximizing lambda (0 on the boundary, +inf when J is infinite).
    double argmax = 0.0;
};

/// J(a) = sup_{lambda > 0} (a lambda - int log phi(lambda k_gamma)) with its maximizer.
ConjugatePoint conjugate(const InnovationModel& model, double gamma, double a);
double conjugate_J(const InnovationModel& model, double gamma, double a);

/// theta = min_x x J(x^{-gamma}) and its minimizer tau, with A from the
/// tilt equation. Flags (does not throw) a near-flat minimum, keeping the
/// smallest minimizer.
LdpSolution solve_theta_case_a(const InnovationModel& model, double gamma);

/// theta_C = |g|_beta^{-alpha}, beta = alpha / (alpha - 1), for 1/2 < gamma < 1
/// and alpha gamma < 1. Throws WrongRegime otherwise.
LdpSolution solve_case_c(const GFunction& g, const InnovationModel& model, double norm_tol = 1e-10);

/// theta_C from an explicit finite coefficient sequence.
double case_c_constant(std::span<const double> coeffs, double alpha);

/// x_i = g_i^{1/(alpha-1)} / sum_j g_j^beta, the allocation with sum g_i x_i = 1
/// that attains sum x_i^alpha = (sum g_i^beta)^{-alpha/beta}.
std::vector<double> case_c_allocation(std::span<const double> coeffs, double alpha);

CaseTag classify_case(const GFunction& g, const InnovationModel& model);

/// Classify and run the matching solver. Throws Unsupported for the
/// excluded regimes.
LdpSolution solve(const GFunction& g, const InnovationModel& model);

}  // namespace gfruin

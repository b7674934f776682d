#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gfruin/innovation.hpp"
#include "gfruin/kernel_coeffs.hpp"
#include "gfruin/large_deviations.hpp"

namespace gfruin {

/// Per-index tilts lambda_i = A k_gamma(i / (tau v_t)) for 1 <= i <= horizon.
struct TiltSchedule {
    double t = 0.0;
    double v_t = 0.0;
    double gamma = 1.0;
    double tau = 0.0;
    double A = 0.0;
    /// ceil(tau v_t)
    std::size_t horizon = 0;
    /// lambdas[i - 1] is the tilt of innovation i.
    std::vector<double> lambdas;
    double lambda_cap = 0.0;
    std::size_t capped_count = 0;
    std::vector<std::string> warnings;

    /// Tilt of innovation i (1-based); zero beyond the horizon.
    double lambda(std::size_t i) const noexcept {
        return (i >= 1 && i <= lambdas.size()) ? lambdas[i - 1] : 0.0;
    }
};

/// A with int_0^1 k_gamma m(A k_gamma) du = tau^{-gamma}.
double solve_A(const InnovationModel& model, double gamma, double tau);

/// S(lambda) = int_0^{lambda} gamma (lambda - v)^{gamma - 1} m(A k_gamma(v / tau)) dv.
double most_likely_path(const InnovationModel& model, double gamma, double tau, double A,
                        double lambda);

/// Tilt schedule for threshold t. Refuses a solution flagged with a
/// non-unique minimum unless `force` is set.
TiltSchedule build_tilt_schedule(const GFunction& g, const InnovationModel& model,
                                 const LdpSolution& sol, double t, bool force = false);
TiltSchedule build_tilt_schedule(CoeffStream& stream, const InnovationModel& model,
                                 const LdpSolution& sol, double t, bool force = false);

/// Schedule with the given tilts, for tests and zero-tilt comparisons.
TiltSchedule make_schedule(std::vector<double> lambdas, double t, double v_t);

struct TiltProfileRow {
    std::size_t i = 0;
    double v = 0.0;
    double lambda = 0.0;
    double tilted_mean = 0.0;
};

/// (v = i / v_t, lambda_i, m(lambda_i)) for 1 <= i <= n_max.
std::vector<TiltProfileRow> tilt_profile(const TiltSchedule& schedule, const InnovationModel& model,
                                         std::size_t n_max);

struct PathRow {
    double gamma = 0.0;
    double tau = 0.0;
    double lambda = 0.0;
    double S = 0.0;
};

/// S(lambda) on `grid` for each gamma, solving tau and A per gamma.
std::vector<PathRow> figure_data(const InnovationModel& model, const std::vector<double>& gammas,
                                 const std::vector<double>& grid);

/// n equally spaced points on [0, hi].
std::vector<double> linear_grid(double hi, std::size_t n);

/// True when the samples of S rise to a single peak and then fall.
bool is_unimodal(const std::vector<double>& values, double slack = 1e-12);

}  // namespace gfruin

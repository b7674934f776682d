#pragma once

// Scalar numerical kernels shared by the solver modules: compensated
// summation, quadrature front-ends, safeguarded root finding and
// golden-section minimization.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gfruin/errors.hpp"

namespace gfruin::numerics {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline constexpr double kQuadTolerance = 1e-12;
/// 2^14 panels, the Kronrod subdivision budget.
inline constexpr unsigned kKronrodMaxDepth = 14;

/// Adaptive Gauss-Kronrod (15/31) for integrands that are continuous on [a, b].
template <class F>
double integrate_smooth(F&& f, double a, double b, double tol = kQuadTolerance,
                        double* error = nullptr) {
    if (a == b) return 0.0;
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        std::forward<F>(f), a, b, kKronrodMaxDepth, tol, &err);
    if (error) *error = err;
    return value;
}

namespace detail {
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_instance() {
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
    return integrator;
}
}  // namespace detail

/// Double-exponential quadrature on [a, b] for integrands with integrable
/// endpoint singularities. The integrand is called as f(x, dl, dr) where
/// dl = x - a and dr = b - x are accurate even when x rounds to an endpoint.
template <class F>
double integrate_endpoint_singular(F&& f, double a, double b, double tol = kQuadTolerance,
                                   double* error = nullptr) {
    if (a == b) return 0.0;
    const double half = 0.5 * (b - a);
    const double width = b - a;
    auto canonical = [&](double z, double zc) -> double {
        double dl;
        double dr;
        // |zc| is the distance from z to the nearer end of [-1, 1]; its sign
        // convention differs between Boost releases.
        if (z < 0.0) {
            dl = half * std::abs(zc);
            dr = width - dl;
        } else if (z > 0.0) {
            dr = half * std::abs(zc);
            dl = width - dr;
        } else {
            dl = half;
            dr = half;
        }
        if (dl <= 0.0 || dr <= 0.0) return 0.0;
        const double x = (z <= 0.0) ? a + dl : b - dr;
        return f(x, dl, dr);
    };
    double err = 0.0;
    double l1 = 0.0;
    const double value = detail::tanh_sinh_instance().integrate(canonical, tol, &err, &l1);
    if (error) *error = half * err;
    return half * value;
}

/// Integral over [a, inf) of a rapidly decaying integrand.
template <class F>
double integrate_half_line(F&& f, double a, double tol = kQuadTolerance) {
    static thread_local boost::math::quadrature::exp_sinh<double> integrator(9);
    return integrator.integrate([&](double s) { return f(a + s); }, 0.0,
                                std::numeric_limits<double>::infinity(), tol);
}

/// Grow `hi` by doubling until g(hi) > 0. `g` must be nondecreasing.
template <class G>
double expand_upper(G&& g, double hi, int max_doublings = 200) {
    for (int i = 0; i < max_doublings; ++i) {
        if (g(hi) > 0.0) return hi;
        hi *= 2.0;
    }
    throw Error(ErrorKind::NoRoot, "bracket expansion failed to find a sign change");
}

/// Root of a nondecreasing function on [lo, hi] with g(lo) <= 0 <= g(hi).
/// `fg(x)` returns {g(x), g'(x)}; Newton steps leaving the bracket, or
/// with a nonpositive slope, fall back to bisection.
template <class FG>
double safeguarded_newton(FG&& fg, double lo, double hi, double rel_tol = 1e-14,
                          int max_iter = 300) {
    double x = 0.5 * (lo + hi);
    double prev_step = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const auto [g, dg] = fg(x);
        if (g == 0.0) return x;
        if (g < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double next = (dg > 0.0 && std::isfinite(dg)) ? x - g / dg : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double scale = std::max(std::abs(next), std::numeric_limits<double>::min());
        const double step = std::abs(next - x);
        if (step <= rel_tol * scale || (hi - lo) <= rel_tol * scale) return next;
        // Steps that stop shrinking near the tolerance are evaluation noise.
        if (step <= 100.0 * rel_tol * scale && step >= 0.25 * prev_step) return next;
        prev_step = step;
        x = next;
    }
    return x;
}

/// Plain bisection for a nondecreasing g with g(lo) <= 0 <= g(hi).
template <class G>
double bisect(G&& g, double lo, double hi, double rel_tol = 1e-15, int max_iter = 400) {
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= rel_tol * std::abs(mid)) break;
    }
    return 0.5 * (lo + hi);
}

struct MinimizeResult {
    double x = 0.0;
    double fx = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

/// Golden-section search for a unimodal f on [lo, hi], stopping when the
/// bracket is narrower than rel_width times the current abscissa.
template <class F>
MinimizeResult golden_section(F&& f, double lo, double hi, double rel_width = 1e-8,
                              int max_iter = 500) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    int it = 0;
    for (; it < max_iter; ++it) {
        if (hi - lo <= rel_width * std::abs(0.5 * (lo + hi))) break;
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    MinimizeResult r;
    r.lo = lo;
    r.hi = hi;
    r.iterations = it;
    if (fc <= fd) {
        r.x = c;
        r.fx = fc;
    } else {
        r.x = d;
        r.fx = fd;
    }
    return r;
}

}  // namespace gfruin::numerics

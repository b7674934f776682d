#include "gfruin/innovation.hpp"

#include <cmath>
#include <numbers>
#include <type_traits>

#include "gfruin/errors.hpp"
#include "gfruin/numerics.hpp"

namespace gfruin {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Standard Weibull W of shape alpha tilted by ell: density proportional to
// alpha w^{alpha-1} exp(-w^alpha + ell w) = alpha exp(h(w)).
struct WeibullShape {
    double alpha;
    double ell;

    double h(double w) const { return (alpha - 1.0) * std::log(w) - std::pow(w, alpha) + ell * w; }
    double dh(double w) const {
        return (alpha - 1.0) / w - alpha * std::pow(w, alpha - 1.0) + ell;
    }
    double d2h(double w) const {
        return -(alpha - 1.0) / (w * w) - alpha * (alpha - 1.0) * std::pow(w, alpha - 2.0);
    }
    // h(w) - h(mode) with ell eliminated through h'(mode) = 0, so no
    // large terms cancel when mode^alpha is big.
    double rel_h(double w, double mode) const { return rel_h_log(std::log(w / mode), mode); }
    double rel_h_log(double u, double mode) const {
        const double m_alpha = std::pow(mode, alpha);
        double a;  // u - expm1(u)
        double b;  // expm1(alpha u) - alpha expm1(u)
        if (std::abs(u) < 0.05 && std::abs(alpha * u) < 0.5) {
            a = 0.0;
            b = 0.0;
            double term = u;
            double alpha_pow = alpha;
            for (int k = 2; k <= 30; ++k) {
                term *= u / k;
                alpha_pow *= alpha;
                a -= term;
                b += (alpha_pow - alpha) * term;
                if (std::abs(term) * alpha_pow < 1e-18 * std::abs(b)) break;
            }
        } else {
            a = u - std::expm1(u);
            b = std::expm1(alpha * u) - alpha * std::expm1(u);
        }
        return (alpha - 1.0) * a - m_alpha * b;
    }

    double mode() const {
        // Both starting points have dh >= 0.
        double lo = std::pow((alpha - 1.0) / alpha, 1.0 / alpha);
        if (ell > 0.0) lo = std::max(lo, std::pow(ell / alpha, 1.0 / (alpha - 1.0)));
        double hi = 2.0 * lo;
        while (dh(hi) > 0.0) hi *= 2.0;
        if (dh(lo) <= 0.0) return lo;
        return numerics::safeguarded_newton(
            [&](double w) { return std::pair{-dh(w), -d2h(w)}; }, lo, hi, 1e-15);
    }
};

struct ShapeMoments {
    double log_mgf;
    double mean;
    double variance;
};

ShapeMoments shape_moments(const WeibullShape& s) {
    const double mode = s.mode();
    const double hm = s.h(mode);
    const double curv = -s.d2h(mode);
    // Trapezoid rule in t for w = mode exp(r sinh t): double-exponential
    // decay at both ends, concentrated on the peak of width 1/sqrt(curv).
    const double r = std::min(1.0, 4.0 / (mode * std::sqrt(curv)));
    constexpr double kStep = 1.0 / 32.0;
    double i0 = 0.0;
    double i1 = 0.0;
    double i2 = 0.0;
    auto node = [&](double t) {
        const double u = r * std::sinh(t);
        const double w = mode * std::exp(u);
        const double e = std::exp(s.rel_h_log(u, mode)) * w * r * std::cosh(t);
        const double d = mode * std::expm1(u);
        i0 += e;
        i1 += e * d;
        i2 += e * d * d;
        return e;
    };
    node(0.0);
    for (int side : {-1, 1}) {
        int small = 0;
        for (int j = 1; j < 4096 && small < 4; ++j) {
            const double e = node(side * j * kStep);
            small = (e < 1e-20 * i0 || !std::isfinite(e)) ? small + 1 : 0;
        }
    }
    i0 *= kStep;
    i1 *= kStep;
    i2 *= kStep;
    if (!(i0 > 0.0) || !std::isfinite(i0)) {
        throw Error(ErrorKind::NonFiniteMGF, "Weibull moment quadrature failed");
    }
    ShapeMoments m;
    m.log_mgf = std::log(s.alpha) + hm + std::log(i0);
    const double d1 = i1 / i0;
    m.mean = mode + d1;
    m.variance = std::max(0.0, i2 / i0 - d1 * d1);
    return m;
}

double log_sum_exp2(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Probability of the upper atom after tilting by lambda.
double two_point_upper(const TwoPointSpec& s, double lambda) {
    const double z = std::log(s.p) - std::log1p(-s.p) + lambda * (s.hi - s.lo);
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

InnovationModel::InnovationModel(InnovationSpec spec) : spec_(spec) {
    std::visit(
        Overloaded{
            [&](const GaussianSpec& g) {
                if (!(g.sigma > 0.0) || !std::isfinite(g.mu)) {
                    throw Error(ErrorKind::InvalidArgument, "gaussian needs sigma > 0");
                }
                mean_ = g.mu;
            },
            [&](const TwoPointSpec& t) {
                if (!(t.p > 0.0 && t.p < 1.0) || !(t.lo < t.hi)) {
                    throw Error(ErrorKind::InvalidArgument, "two-point needs 0 < p < 1 and lo < hi");
                }
                mean_ = t.p * t.hi + (1.0 - t.p) * t.lo;
            },
            [&](const WeibullTailSpec& w) {
                if (!(w.alpha > 1.0) || !(w.scale > 0.0) || !std::isfinite(w.mu)) {
                    throw Error(ErrorKind::InvalidArgument, "weibull needs alpha > 1 and scale > 0");
                }
                mean_ = w.mu;
                weibull_shift_ = w.mu - w.scale * std::tgamma(1.0 + 1.0 / w.alpha);
            },
        },
        spec_);
}

InnovationModel InnovationModel::gaussian(double mu, double sigma) {
    return InnovationModel(GaussianSpec{mu, sigma});
}
InnovationModel InnovationModel::two_point(double p, double lo, double hi) {
    return InnovationModel(TwoPointSpec{p, lo, hi});
}
InnovationModel InnovationModel::weibull_tail(double alpha, double mu, double scale) {
    return InnovationModel(WeibullTailSpec{alpha, mu, scale});
}

std::string InnovationModel::kind_name() const {
    return std::visit(Overloaded{[](const GaussianSpec&) { return std::string("gaussian"); },
                                 [](const TwoPointSpec&) { return std::string("two_point"); },
                                 [](const WeibullTailSpec&) { return std::string("weibull"); }},
                      spec_);
}

InnovationModel::WeibullMoments InnovationModel::weibull_moments(const WeibullTailSpec& w,
                                                                 double lambda) const {
    const auto m = shape_moments(WeibullShape{w.alpha, w.scale * lambda});
    return {lambda * weibull_shift_ + m.log_mgf, weibull_shift_ + w.scale * m.mean,
            w.scale * w.scale * m.variance};
}

double InnovationModel::log_mgf(double lambda) const {
    if (lambda == 0.0) return 0.0;
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) {
                return lambda * g.mu + 0.5 * g.sigma * g.sigma * lambda * lambda;
            },
            [&](const TwoPointSpec& t) {
                return log_sum_exp2(std::log(t.p) + lambda * t.hi,
                                    std::log1p(-t.p) + lambda * t.lo);
            },
            [&](const WeibullTailSpec& w) {
                if (lambda < 0.0) throw Error(ErrorKind::OutOfRange, "lambda must be >= 0");
                return weibull_moments(w, lambda).log_mgf;
            },
        },
        spec_);
}

double InnovationModel::mean_fn(double lambda) const {
    if (lambda == 0.0) return mean_;
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) { return g.mu + g.sigma * g.sigma * lambda; },
            [&](const TwoPointSpec& t) {
                return t.lo + (t.hi - t.lo) * two_point_upper(t, lambda);
            },
            [&](const WeibullTailSpec& w) { return weibull_moments(w, lambda).mean; },
        },
        spec_);
}

double InnovationModel::mean_fn_deriv(double lambda) const {
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) { return g.sigma * g.sigma; },
            [&](const TwoPointSpec& t) {
                const double q = two_point_upper(t, lambda);
                return (t.hi - t.lo) * (t.hi - t.lo) * q * (1.0 - q);
            },
            [&](const WeibullTailSpec& w) { return weibull_moments(w, lambda).variance; },
        },
        spec_);
}

double InnovationModel::mean_fn_sup() const noexcept {
    if (const auto* t = std::get_if<TwoPointSpec>(&spec_)) return t->hi;
    return std::numeric_limits<double>::infinity();
}

double InnovationModel::mean_fn_inv(double y) const {
    const double tol = 1e-13 * std::max(1.0, std::abs(mean_));
    if (y < mean_ - tol) throw Error(ErrorKind::OutOfRange, "mean_fn_inv: y below the mean");
    if (y <= mean_) return 0.0;
    if (y >= mean_fn_sup()) {
        throw Error(ErrorKind::OutOfRange, "mean_fn_inv: y outside the image of the mean function");
    }
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) { return (y - g.mu) / (g.sigma * g.sigma); },
            [&](const TwoPointSpec& t) {
                const double q = (y - t.lo) / (t.hi - t.lo);
                const double logit_q = std::log(q) - std::log1p(-q);
                const double logit_p = std::log(t.p) - std::log1p(-t.p);
                return (logit_q - logit_p) / (t.hi - t.lo);
            },
            [&](const WeibullTailSpec& w) {
                const double hi =
                    numerics::expand_upper([&](double l) { return mean_fn(l) - y; }, 1.0);
                return numerics::safeguarded_newton(
                    [&](double l) {
                        const auto m = weibull_moments(w, l);
                        return std::pair{m.mean - y, m.variance};
                    },
                    0.0, hi, 1e-14);
            },
        },
        spec_);
}

double InnovationModel::cramer_transform(double x) const {
    const double lambda = mean_fn_inv(x);
    if (lambda == 0.0) return 0.0;
    return lambda * x - log_mgf(lambda);
}

std::optional<double> InnovationModel::tail_index() const noexcept {
    return std::visit(Overloaded{[](const GaussianSpec&) { return std::optional<double>(2.0); },
                                 [](const TwoPointSpec&) { return std::optional<double>(); },
                                 [](const WeibullTailSpec& w) { return std::optional<double>(w.alpha); }},
                      spec_);
}

double InnovationModel::log_tail(double x) const {
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) {
                const double z = (x - g.mu) / g.sigma;
                if (z < 30.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
                // Mills ratio expansion.
                const double z2 = z * z;
                return -0.5 * z2 - std::log(z * std::sqrt(2.0 * std::numbers::pi)) +
                       std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
            },
            [&](const TwoPointSpec& t) {
                if (x < t.lo) return 0.0;
                if (x < t.hi) return std::log(t.p);
                return -std::numeric_limits<double>::infinity();
            },
            [&](const WeibullTailSpec& w) {
                if (x <= weibull_shift_) return 0.0;
                return -std::pow((x - weibull_shift_) / w.scale, w.alpha);
            },
        },
        spec_);
}

bool InnovationModel::satisfies_standard_assumption() const noexcept {
    return !std::holds_alternative<TwoPointSpec>(spec_);
}

InnovationModel InnovationModel::scaled(double c) const {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale factor must be positive");
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) { return gaussian(c * g.mu, c * g.sigma); },
            [&](const TwoPointSpec& t) { return two_point(t.p, c * t.lo, c * t.hi); },
            [&](const WeibullTailSpec& w) { return weibull_tail(w.alpha, c * w.mu, c * w.scale); },
        },
        spec_);
}

double InnovationModel::sample(Rng& rng) const {
    return std::visit(
        Overloaded{
            [&](const GaussianSpec& g) { return g.mu + g.sigma * rng.normal(); },
            [&](const TwoPointSpec& t) { return rng.uniform() < t.p ? t.hi : t.lo; },
            [&](const WeibullTailSpec& w) {
                return weibull_shift_ + w.scale * std::pow(-std::log(rng.uniform_pos()), 1.0 / w.alpha);
            },
        },
        spec_);
}

TiltedSampler InnovationModel::tilted_sampler(double lambda) const {
    if (lambda < 0.0) throw Error(ErrorKind::OutOfRange, "tilt must be nonnegative");
    TiltedSampler s;
    s.lambda_ = lambda;
    std::visit(
        Overloaded{
            [&](const GaussianSpec& g) {
                s.kind_ = TiltedSampler::Kind::Gaussian;
                s.a_ = g.mu + g.sigma * g.sigma * lambda;
                s.b_ = g.sigma;
                s.log_mgf_ = log_mgf(lambda);
            },
            [&](const TwoPointSpec& t) {
                s.kind_ = TiltedSampler::Kind::TwoPoint;
                s.a_ = lambda == 0.0 ? t.p : two_point_upper(t, lambda);
                s.b_ = t.lo;
                s.c_ = t.hi;
                s.log_mgf_ = log_mgf(lambda);
            },
            [&](const WeibullTailSpec& w) {
                s.kind_ = TiltedSampler::Kind::Weibull;
                s.log_mgf_ = log_mgf(lambda);
                s.alpha_ = w.alpha;
                s.ell_ = w.scale * lambda;
                s.shift_ = weibull_shift_;
                s.scale_ = w.scale;
                const WeibullShape shape{w.alpha, s.ell_};
                const double mode = shape.mode();
                const double hm = shape.h(mode);
                s.mode_ = mode;
                s.h_mode_ = hm;
                // Points where h drops by one on either side of the mode.
                double lo = 0.5 * mode;
                while (shape.rel_h(lo, mode) > -1.0) lo *= 0.5;
                s.w_left_ = numerics::bisect(
                    [&](double x) { return shape.rel_h(x, mode) + 1.0; }, lo, mode);
                double hi = 2.0 * mode;
                while (shape.rel_h(hi, mode) > -1.0) hi *= 2.0;
                s.w_right_ = numerics::bisect(
                    [&](double x) { return -1.0 - shape.rel_h(x, mode); }, mode, hi);
                s.slope_left_ = shape.dh(s.w_left_);
                s.slope_right_ = shape.dh(s.w_right_);
                s.mass_left_ = std::exp(-1.0) * -std::expm1(-s.slope_left_ * s.w_left_) / s.slope_left_;
                s.mass_center_ = s.w_right_ - s.w_left_;
                s.mass_right_ = std::exp(-1.0) / -s.slope_right_;
            },
        },
        spec_);
    return s;
}

double InnovationModel::sample_tilted(double lambda, Rng& rng) const {
    if (lambda == 0.0) return sample(rng);
    return tilted_sampler(lambda).draw(rng);
}

double TiltedSampler::draw(Rng& rng) const {
    switch (kind_) {
        case Kind::Gaussian:
            return a_ + b_ * rng.normal();
        case Kind::TwoPoint:
            return rng.uniform() < a_ ? c_ : b_;
        case Kind::Weibull:
            break;
    }
    if (lambda_ == 0.0) {
        return shift_ + scale_ * std::pow(-std::log(rng.uniform_pos()), 1.0 / alpha_);
    }
    // Rejection from the piecewise exponential envelope of the log-concave
    // tilted density: tangents at w_left_/w_right_ outside, flat between.
    const WeibullShape shape{alpha_, ell_};
    const double total = mass_left_ + mass_center_ + mass_right_;
    for (int trial = 0; trial < InnovationModel::kRejectionBudget; ++trial) {
        const double u = rng.uniform() * total;
        double w;
        double log_env;
        if (u < mass_left_) {
            const double floor_term = std::exp(-slope_left_ * w_left_);
            w = w_left_ + std::log(floor_term + rng.uniform_pos() * (1.0 - floor_term)) / slope_left_;
            if (!(w > 0.0)) continue;
            log_env = -1.0 + slope_left_ * (w - w_left_);
        } else if (u < mass_left_ + mass_center_) {
            w = w_left_ + rng.uniform() * mass_center_;
            log_env = 0.0;
        } else {
            w = w_right_ - std::log(rng.uniform_pos()) / -slope_right_;
            log_env = -1.0 + slope_right_ * (w - w_right_);
        }
        if (std::log(rng.uniform_pos()) <= shape.rel_h(w, mode_) - log_env) {
            return shift_ + scale_ * w;
        }
    }
    throw Error(ErrorKind::RejectionBudgetExceeded, "tilted Weibull draw exceeded its trial budget");
}

}  // namespace gfruin

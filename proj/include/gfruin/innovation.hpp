#pragma once

#include <optional>
#include <string>
#include <variant>

#include "gfruin/rng.hpp"

namespace gfruin {

struct GaussianSpec {
    double mu = -1.0;
    double sigma = 1.0;
    bool operator==(const GaussianSpec&) const = default;
};

/// P{X = hi} = p, P{X = lo} = 1 - p.
struct TwoPointSpec {
    double p = 0.5;
    double lo = -1.0;
    double hi = 1.0;
    bool operator==(const TwoPointSpec&) const = default;
};

/// X = shift + scale W with W standard Weibull of shape alpha, and shift
/// chosen so that E X = mu. -log P{X > x} = ((x - shift) / scale)^alpha.
struct WeibullTailSpec {
    double alpha = 1.5;
    double mu = -1.0;
    double scale = 1.0;
    bool operator==(const WeibullTailSpec&) const = default;
};

using InnovationSpec = std::variant<GaussianSpec, TwoPointSpec, WeibullTailSpec>;

/// Sampler for one fixed tilt, with any per-tilt setup done up front.
class TiltedSampler {
public:
    double lambda() const noexcept { return lambda_; }
    /// log phi(lambda)
    double log_mgf() const noexcept { return log_mgf_; }
    double draw(Rng& rng) const;

private:
    friend class InnovationModel;
    enum class Kind { Gaussian, TwoPoint, Weibull };
    Kind kind_ = Kind::Gaussian;
    double lambda_ = 0.0;
    double log_mgf_ = 0.0;
    // Gaussian: a = mean, b = sd. Two-point: a = P{hi}, b = lo, c = hi.
    double a_ = 0.0, b_ = 0.0, c_ = 0.0;
    // Weibull envelope: X = shift + scale W, density of W ~ exp(h(w) - h(mode)).
    double alpha_ = 0.0, ell_ = 0.0, shift_ = 0.0, scale_ = 1.0;
    double mode_ = 0.0, h_mode_ = 0.0;
    double w_left_ = 0.0, w_right_ = 0.0, slope_left_ = 0.0, slope_right_ = 0.0;
    double mass_left_ = 0.0, mass_center_ = 0.0, mass_right_ = 0.0;
};

/// Innovation distribution F with its moment generating function, mean
/// function m = (log phi)', and exponentially tilted sampler. Immutable.
class InnovationModel {
public:
    explicit InnovationModel(InnovationSpec spec);

    static InnovationModel gaussian(double mu, double sigma);
    static InnovationModel two_point(double p, double lo, double hi);
    static InnovationModel weibull_tail(double alpha, double mu, double scale = 1.0);

    const InnovationSpec& spec() const noexcept { return spec_; }
    std::string kind_name() const;
    double mean() const noexcept { return mean_; }

    /// log E exp(lambda X); lambda >= 0.
    double log_mgf(double lambda) const;
    /// m(lambda)
    double mean_fn(double lambda) const;
    /// m'(lambda), the variance of the tilted law.
    double mean_fn_deriv(double lambda) const;
    /// lambda >= 0 with m(lambda) = y. OutOfRange if y < mu or y is not in
    /// the image of m.
    double mean_fn_inv(double y) const;
    /// sup_lambda (lambda x - log phi(lambda)) for x >= mu.
    double cramer_transform(double x) const;

    /// Supremum of the image of m (+inf unless the support is bounded above).
    double mean_fn_sup() const noexcept;
    /// Index alpha of regular variation of -log(1 - F), if any.
    std::optional<double> tail_index() const noexcept;
    /// log P{X > x}
    double log_tail(double x) const;
    /// Image of m contains [0, inf) and the MGF is finite on [0, inf).
    bool satisfies_standard_assumption() const noexcept;

    /// Law of c X for c > 0.
    InnovationModel scaled(double c) const;

    double sample(Rng& rng) const;
    /// Draw from e^{lambda x} dF(x) / phi(lambda).
    double sample_tilted(double lambda, Rng& rng) const;
    TiltedSampler tilted_sampler(double lambda) const;

    /// Maximum acceptance-rejection trials per tilted Weibull draw.
    static constexpr int kRejectionBudget = 10000;

private:
    struct WeibullMoments {
        double log_mgf;
        double mean;
        double variance;
    };
    WeibullMoments weibull_moments(const WeibullTailSpec& w, double lambda) const;

    InnovationSpec spec_;
    double mean_ = 0.0;
    double weibull_shift_ = 0.0;
};

}  // namespace gfruin

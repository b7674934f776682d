#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gfruin/errors.hpp"
#include "gfruin/innovation.hpp"
#include "gfruin/rng.hpp"

using namespace gfruin;

namespace {

std::vector<InnovationModel> all_models() {
    return {
        InnovationModel::gaussian(-1.0, 1.0),
        InnovationModel::gaussian(-0.5, 2.0),
        InnovationModel::two_point(0.5, -1.0, 1.0),
        InnovationModel::two_point(0.3, -2.0, 1.0),
        InnovationModel::weibull_tail(1.5, -1.0),
        InnovationModel::weibull_tail(1.25, -1.0, 0.7),
        InnovationModel::weibull_tail(2.5, -0.5),
    };
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST(LogMgf, Examples) {
    const auto g = InnovationModel::gaussian(-1.0, 1.0);
    EXPECT_NEAR(g.log_mgf(2.0), 0.0, 1e-15);
    for (const auto& m : all_models()) EXPECT_NEAR(m.log_mgf(0.0), 0.0, 1e-14) << m.kind_name();
    EXPECT_NEAR(InnovationModel::two_point(0.5, -1.0, 1.0).log_mgf(1.0), std::log(std::cosh(1.0)), 1e-15);
    EXPECT_NEAR(std::log(std::cosh(1.0)), 0.4338, 1e-4);
}

TEST(LogMgf, WeibullMatchesDirectSeries) {
    // E e^{lambda W} = sum_k lambda^k Gamma(1 + k / alpha) / k! for the standard Weibull.
    const double alpha = 1.5, mu = -1.0, scale = 0.8;
    const auto m = InnovationModel::weibull_tail(alpha, mu, scale);
    const double shift = mu - scale * std::tgamma(1.0 + 1.0 / alpha);
    for (double lambda : {0.1, 0.5, 1.0, 2.0}) {
        double series = 0.0, term = 1.0;
        for (int k = 0; k < 200; ++k) {
            if (k > 0) term *= lambda * scale / k;
            series += term * std::tgamma(1.0 + k / alpha);
        }
        EXPECT_NEAR(m.log_mgf(lambda), lambda * shift + std::log(series), 1e-10) << lambda;
    }
}

TEST(MeanFn, Examples) {
    const auto g = InnovationModel::gaussian(-1.0, 1.0);
    EXPECT_NEAR(g.mean_fn(2.0), 1.0, 1e-15);
    EXPECT_NEAR(g.mean_fn(3.5), 2.5, 1e-15);
    EXPECT_NEAR(g.mean_fn_inv(0.0), 1.0, 1e-12);
    for (const auto& m : all_models()) EXPECT_NEAR(m.mean_fn(0.0), m.mean(), 1e-12) << m.kind_name();
}

TEST(MeanFn, InverseBelowMeanIsOutOfRange) {
    for (const auto& m : all_models()) {
        try {
            m.mean_fn_inv(m.mean() - 0.1);
            FAIL() << m.kind_name();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
        }
    }
    EXPECT_THROW(InnovationModel::two_point(0.5, -1.0, 1.0).mean_fn_inv(1.0), Error);
}

TEST(MeanFn, FiniteDifferenceOfLogMgf) {
    const double h = 1e-4;
    for (const auto& m : all_models()) {
        for (double l = 0.25; l <= 10.0; l += 0.25) {
            const double fd = (m.log_mgf(l + h) - m.log_mgf(l - h)) / (2.0 * h);
            EXPECT_NEAR(m.mean_fn(l), fd, 1e-6 * std::max(1.0, std::abs(fd))) << m.kind_name() << " lambda=" << l;
        }
    }
}

TEST(MeanFn, DerivativeIsFiniteDifferenceOfMean) {
    const double h = 1e-4;
    for (const auto& m : all_models()) {
        for (double l = 0.25; l <= 6.0; l += 0.5) {
            const double fd = (m.mean_fn(l + h) - m.mean_fn(l - h)) / (2.0 * h);
            EXPECT_NEAR(m.mean_fn_deriv(l), fd, 1e-5 * std::max(1.0, std::abs(fd))) << m.kind_name();
            EXPECT_GT(m.mean_fn_deriv(l), 0.0);
        }
    }
}

TEST(MeanFn, InverseRoundTrip) {
    for (const auto& m : all_models()) {
        for (double l = 0.0; l <= 10.0; l += 0.5) {
            // y = m(lambda) carries rounding of order eps |y|, which the inverse
            // amplifies by 1 / m'(lambda) where m saturates.
            const double y = m.mean_fn(l);
            const double cond = 4.0 * 2.2e-16 * std::max(1.0, std::abs(y)) / m.mean_fn_deriv(l);
            EXPECT_NEAR(m.mean_fn_inv(y), l, 1e-9 * std::max(1.0, l) + cond) << m.kind_name() << " lambda=" << l;
        }
    }
}

TEST(LogMgf, MidpointConvexity) {
    for (const auto& m : all_models()) {
        for (double a = 0.0; a <= 8.0; a += 0.5) {
            for (double b = a + 0.5; b <= 8.0; b += 1.5) {
                EXPECT_LE(m.log_mgf(0.5 * (a + b)), 0.5 * (m.log_mgf(a) + m.log_mgf(b)) + 1e-12) << m.kind_name();
            }
        }
    }
}

TEST(LogMgf, ScalingAcrossMeans) {
    // Gaussian N(mu, mu^2) is (-mu) times N(-1, 1).
    const auto base = InnovationModel::gaussian(-1.0, 1.0);
    for (double mu : {-0.5, -2.0, -3.0}) {
        const auto scaled = InnovationModel::gaussian(mu, -mu);
        const auto via = base.scaled(-mu);
        for (double l = 0.0; l <= 5.0; l += 0.5) {
            EXPECT_NEAR(scaled.log_mgf(l), base.log_mgf(-mu * l), 1e-12);
            EXPECT_NEAR(via.log_mgf(l), base.log_mgf(-mu * l), 1e-12);
        }
    }
    const auto w = InnovationModel::weibull_tail(1.5, -1.0);
    const auto w2 = w.scaled(2.0);
    EXPECT_NEAR(w2.mean(), -2.0, 1e-12);
    for (double l : {0.3, 1.0, 2.0}) EXPECT_NEAR(w2.log_mgf(l), w.log_mgf(2.0 * l), 1e-10);
}

TEST(Sampling, GaussianTiltedMean) {
    const auto g = InnovationModel::gaussian(-1.0, 1.0);
    Rng rng(11, 0);
    const auto s = g.tilted_sampler(2.0);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += s.draw(rng);
    EXPECT_NEAR(sum / n, 1.0, 0.005);
}

TEST(Sampling, TwoPointTiltedProbability) {
    const auto m = InnovationModel::two_point(0.5, -1.0, 1.0);
    Rng rng(5, 1);
    const int n = 400000;
    int up = 0;
    for (int i = 0; i < n; ++i) up += m.sample_tilted(1.0, rng) > 0.0;
    const double want = std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0));
    EXPECT_NEAR(want, 0.8808, 1e-4);
    EXPECT_NEAR(double(up) / n, want, 4.0 * std::sqrt(want * (1 - want) / n));
}

TEST(Sampling, TiltedMomentIdentityAllModels) {
    for (const auto& m : all_models()) {
        for (double l : {0.5, 1.0, 2.0}) {
            Rng rng(99, static_cast<std::uint64_t>(l * 10));
            const auto s = m.tilted_sampler(l);
            const int n = 200000;
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = s.draw(rng);
                sum += x;
                sq += x * x;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sq / n - mean * mean) / n);
            EXPECT_NEAR(mean, m.mean_fn(l), 4.5 * se) << m.kind_name() << " lambda=" << l;
            EXPECT_NEAR(sq / n - mean * mean, m.mean_fn_deriv(l), 0.03 * m.mean_fn_deriv(l)) << m.kind_name();
        }
    }
}

TEST(Sampling, ZeroTiltMatchesUntilted) {
    for (const auto& m : all_models()) {
        const int n = 20000;
        std::vector<double> a(n), b(n);
        Rng r1(1, 1), r2(2, 2);
        for (int i = 0; i < n; ++i) {
            a[i] = m.sample(r1);
            b[i] = m.sample_tilted(0.0, r2);
        }
        // two-sample KS critical value at level 0.001
        const double crit = 1.95 * std::sqrt(2.0 / n);
        EXPECT_LT(ks_statistic(a, b), crit) << m.kind_name();
    }
}

TEST(Sampling, WeibullTailMatchesSurvival) {
    const auto m = InnovationModel::weibull_tail(1.25, -1.0, 1.0);
    Rng rng(3, 3);
    const int n = 200000;
    const double x = 1.0;
    int above = 0;
    for (int i = 0; i < n; ++i) above += m.sample(rng) > x;
    const double p = std::exp(m.log_tail(x));
    EXPECT_NEAR(double(above) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(CramerTransform, Examples) {
    const auto g = InnovationModel::gaussian(-1.0, 1.0);
    EXPECT_NEAR(g.cramer_transform(0.0), 0.5, 1e-12);
    EXPECT_NEAR(g.cramer_transform(1.0), 2.0, 1e-12);
    for (const auto& m : all_models()) EXPECT_NEAR(m.cramer_transform(m.mean()), 0.0, 1e-12) << m.kind_name();
    EXPECT_THROW(g.cramer_transform(-2.0), Error);
}

TEST(InnovationSpec, Validation) {
    EXPECT_THROW(InnovationModel::gaussian(-1.0, 0.0), Error);
    EXPECT_THROW(InnovationModel::two_point(1.5, -1.0, 1.0), Error);
    EXPECT_THROW(InnovationModel::two_point(0.5, 1.0, -1.0), Error);
    EXPECT_THROW(InnovationModel::weibull_tail(0.0, -1.0), Error);
}

TEST(InnovationSpec, TailIndexAndAssumption) {
    EXPECT_EQ(InnovationModel::weibull_tail(1.25, -1.0).tail_index(), 1.25);
    EXPECT_EQ(InnovationModel::gaussian(-1.0, 1.0).tail_index(), 2.0);
    EXPECT_TRUE(InnovationModel::gaussian(-1.0, 1.0).satisfies_standard_assumption());
    EXPECT_FALSE(InnovationModel::two_point(0.5, -1.0, 1.0).satisfies_standard_assumption());
    EXPECT_EQ(InnovationModel::two_point(0.5, -1.0, 1.0).mean_fn_sup(), 1.0);
}

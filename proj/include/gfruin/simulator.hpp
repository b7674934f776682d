#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfruin/innovation.hpp"
#include "gfruin/rng.hpp"
#include "gfruin/scenario.hpp"

namespace gfruin {

enum class Estimator { Crude, Tilted };
enum class ConvolutionMethod { Auto, Direct, Fft };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);
std::string to_string(ConvolutionMethod m);
ConvolutionMethod parse_convolution(const std::string& name);

struct SimConfig {
    std::vector<double> t_levels;
    std::size_t replications = 10000;
    std::uint64_t seed = 1;
    /// Path length is horizon_mult * v_t; unset means 4 tau.
    std::optional<double> horizon_mult;
    /// Exact path length, overriding horizon_mult.
    std::optional<std::size_t> path_length;
    /// 0 picks the hardware concurrency.
    unsigned threads = 1;
    Estimator estimator = Estimator::Tilted;
    ConvolutionMethod convolution = ConvolutionMethod::Auto;

    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

/// Time normalization for one threshold: diagnostics use v = i / v_t and
/// bins span [0, 2 tau].
struct Frame {
    double t = 0.0;
    double v_t = 1.0;
    double tau = 1.0;
};

struct Bin {
    double center = 0.0;
    double mean = 0.0;
    double weight_sum = 0.0;
    bool operator==(const Bin&) const = default;
};

struct EstimateResult {
    Estimator estimator = Estimator::Crude;
    double t = 0.0;
    double v_t = 0.0;
    double tau = 0.0;
    std::size_t path_length = 0;
    std::size_t replications = 0;
    double p_hat = 0.0;
    /// log p_hat; empty when there were no hits.
    std::optional<double> log_p;
    double std_err = 0.0;
    /// p_hat -/+ 3 std_err clamped to [0, 1].
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t hits = 0;
    /// Replications whose |log W| exceeded the overflow guard.
    std::size_t weight_overflow = 0;
    /// Effective sample size (sum W)^2 / sum W^2 over hitting paths.
    double ess = 0.0;
    /// Share of (weighted) crossings in the final 10% of the path.
    double late_crossing_fraction = 0.0;
    /// Weighted median of n_t_samples; empty without hits.
    std::optional<double> median_n_t;
    std::vector<double> n_t_samples;
    std::vector<double> n_t_weights;
    /// Mean of S_{floor(lambda v_t)} / t over hitting paths, lambda in [0, 2 tau].
    std::vector<Bin> path_bins;
    /// Mean innovation binned by v = i / v_t over hitting paths, v in [0, 2 tau].
    std::vector<Bin> innov_bins;
    std::vector<std::string> warnings;

    bool operator==(const EstimateResult&) const = default;
};

/// Number of grid points for path_bins and bins for innov_bins.
inline constexpr std::size_t kPathGridPoints = 41;
inline constexpr std::size_t kInnovBins = 40;
/// Replications are processed in chunks of this size and merged in order.
inline constexpr std::size_t kChunkSize = 256;
inline constexpr double kLogWeightLimit = 700.0;

/// Computes S_n = sum_{0 <= i < n} g_i X_{n-i} for n = 1..N, reusing
/// buffers and the FFT plan across calls. Not thread-safe; use one per thread.
class PathConvolver {
public:
    PathConvolver(std::span<const double> g, std::size_t n, ConvolutionMethod method);
    ~PathConvolver();
    PathConvolver(const PathConvolver&) = delete;
    PathConvolver& operator=(const PathConvolver&) = delete;

    std::size_t size() const noexcept { return n_; }
    ConvolutionMethod method() const noexcept { return method_; }
    /// x[k] is X_{k+1}; writes s[k] = S_{k+1}.
    void run(std::span<const double> x, std::span<double> s);

private:
    struct FftState;
    std::vector<double> g_;
    std::size_t n_;
    ConvolutionMethod method_;
    std::unique_ptr<FftState> fft_;
};

/// Below this length Auto picks the direct sum.
inline constexpr std::size_t kDirectConvolutionLimit = 256;

std::vector<double> simulate_path(std::span<const double> g, std::span<const double> x,
                                  ConvolutionMethod method = ConvolutionMethod::Auto);
std::vector<double> simulate_path(CoeffStream& g, std::span<const double> x,
                                  ConvolutionMethod method = ConvolutionMethod::Auto);

/// Path length used for a threshold.
std::size_t path_length(const Frame& frame, const SimConfig& cfg);

/// Per-threshold seed: the run seed mixed with the bits of t.
std::uint64_t level_seed(std::uint64_t seed, double t);

struct ReplicationTrace {
    std::vector<double> x;
    std::vector<double> s;
    double log_weight = 0.0;
    bool hit = false;
    std::size_t first_passage = 0;
};

/// Replays replication `index` exactly as the estimators do. `schedule`
/// null means crude sampling.
ReplicationTrace trace_replication(std::span<const double> g, const InnovationModel& model,
                                   const TiltSchedule* schedule, const Frame& frame,
                                   const SimConfig& cfg, std::size_t index);

EstimateResult estimate_crude(std::span<const double> g, const InnovationModel& model,
                              const Frame& frame, const SimConfig& cfg);

/// Innovations i <= horizon drawn from the tilted laws of `schedule`, the
/// rest from F, with weight W = prod_{i <= horizon} phi(lambda_i) e^{-lambda_i X_i}.
EstimateResult estimate_tilted(std::span<const double> g, const InnovationModel& model,
                               const TiltSchedule& schedule, const SimConfig& cfg);

Frame frame_of(const TiltSchedule& schedule);

/// Weighted median: smallest sample whose cumulative weight reaches half the total.
std::optional<double> weighted_median(std::span<const double> values, std::span<const double> weights);

}  // namespace gfruin

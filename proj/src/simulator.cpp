#include "gfruin/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <complex>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fftw3.h>

#include "gfruin/errors.hpp"
#include "gfruin/numerics.hpp"

namespace gfruin {

std::string to_string(Estimator e) { return e == Estimator::Crude ? "crude" : "tilted"; }

Estimator parse_estimator(const std::string& name) {
    if (name == "crude") return Estimator::Crude;
    if (name == "tilted") return Estimator::Tilted;
    throw Error(ErrorKind::ConfigError, "unknown estimator '" + name + "' (crude or tilted)");
}

std::string to_string(ConvolutionMethod m) {
    switch (m) {
        case ConvolutionMethod::Auto: return "auto";
        case ConvolutionMethod::Direct: return "direct";
        case ConvolutionMethod::Fft: return "fft";
    }
    return "auto";
}

ConvolutionMethod parse_convolution(const std::string& name) {
    if (name == "auto") return ConvolutionMethod::Auto;
    if (name == "direct") return ConvolutionMethod::Direct;
    if (name == "fft") return ConvolutionMethod::Fft;
    throw Error(ErrorKind::ConfigError, "unknown convolution '" + name + "' (auto, direct or fft)");
}

void SimConfig::validate() const {
    if (replications < 1) throw Error(ErrorKind::ConfigError, "replications must be at least 1");
    if (horizon_mult && !(*horizon_mult >= 1.0)) {
        throw Error(ErrorKind::ConfigError, "horizon_mult must be at least 1");
    }
    if (path_length && *path_length < 1) {
        throw Error(ErrorKind::ConfigError, "path_length must be at least 1");
    }
    for (double t : t_levels) {
        if (!std::isfinite(t) || t < 0.0) throw Error(ErrorKind::ConfigError, "t levels must be finite and >= 0");
    }
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

struct PathConvolver::FftState {
    std::size_t m = 0;
    double* in = nullptr;
    fftw_complex* spec = nullptr;
    std::vector<std::complex<double>> g_hat;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    ~FftState() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        fftw_free(in);
        fftw_free(spec);
    }
};

PathConvolver::PathConvolver(std::span<const double> g, std::size_t n, ConvolutionMethod method)
    : n_(n), method_(method) {
    if (g.size() < n) {
        throw Error(ErrorKind::InvalidArgument, "coefficient stream does not cover the path length");
    }
    g_.assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n));
    if (method_ == ConvolutionMethod::Auto) {
        method_ = n < kDirectConvolutionLimit ? ConvolutionMethod::Direct : ConvolutionMethod::Fft;
    }
    if (method_ != ConvolutionMethod::Fft || n == 0) return;

    fft_ = std::make_unique<FftState>();
    auto& f = *fft_;
    f.m = std::bit_ceil(2 * n);
    const std::size_t bins = f.m / 2 + 1;
    f.in = fftw_alloc_real(f.m);
    f.spec = fftw_alloc_complex(bins);
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int m = static_cast<int>(f.m);
        f.forward = fftw_plan_dft_r2c_1d(m, f.in, f.spec, FFTW_ESTIMATE);
        f.backward = fftw_plan_dft_c2r_1d(m, f.spec, f.in, FFTW_ESTIMATE);
    }
    std::fill(f.in, f.in + f.m, 0.0);
    std::copy(g_.begin(), g_.end(), f.in);
    fftw_execute(f.forward);
    f.g_hat.resize(bins);
    const double inv_m = 1.0 / static_cast<double>(f.m);
    for (std::size_t k = 0; k < bins; ++k) {
        f.g_hat[k] = std::complex<double>(f.spec[k][0], f.spec[k][1]) * inv_m;
    }
}

PathConvolver::~PathConvolver() = default;

void PathConvolver::run(std::span<const double> x, std::span<double> s) {
    if (x.size() < n_ || s.size() < n_) {
        throw Error(ErrorKind::InvalidArgument, "path buffers shorter than the convolver length");
    }
    if (method_ == ConvolutionMethod::Direct) {
        for (std::size_t k = 0; k < n_; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i <= k; ++i) acc += g_[i] * x[k - i];
            s[k] = acc;
        }
        return;
    }
    auto& f = *fft_;
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_), f.in);
    std::fill(f.in + n_, f.in + f.m, 0.0);
    fftw_execute_dft_r2c(f.forward, f.in, f.spec);
    for (std::size_t k = 0; k < f.g_hat.size(); ++k) {
        const std::complex<double> v = std::complex<double>(f.spec[k][0], f.spec[k][1]) * f.g_hat[k];
        f.spec[k][0] = v.real();
        f.spec[k][1] = v.imag();
    }
    fftw_execute_dft_c2r(f.backward, f.spec, f.in);
    std::copy(f.in, f.in + n_, s.begin());
}

std::vector<double> simulate_path(std::span<const double> g, std::span<const double> x,
                                  ConvolutionMethod method) {
    PathConvolver conv(g, x.size(), method);
    std::vector<double> s(x.size());
    conv.run(x, s);
    return s;
}

std::vector<double> simulate_path(CoeffStream& g, std::span<const double> x,
                                  ConvolutionMethod method) {
    g.extend_to(x.size());
    return simulate_path(g.coeffs(), x, method);
}

std::size_t path_length(const Frame& frame, const SimConfig& cfg) {
    if (cfg.path_length) return *cfg.path_length;
    const double mult = cfg.horizon_mult.value_or(4.0 * frame.tau);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(mult * frame.v_t)));
}

std::uint64_t level_seed(std::uint64_t seed, double t) {
    return mix64(seed ^ mix64(std::bit_cast<std::uint64_t>(t)));
}

Frame frame_of(const TiltSchedule& schedule) { return {schedule.t, schedule.v_t, schedule.tau}; }

std::optional<double> weighted_median(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) return std::nullopt;
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return std::nullopt;
    double acc = 0.0;
    for (std::size_t k : order) {
        acc += weights[k];
        if (acc >= 0.5 * total) return values[k];
    }
    return values[order.back()];
}

namespace {

struct Workspace {
    std::vector<double> x;
    std::vector<double> s;
};

struct Setup {
    std::span<const double> g;
    const InnovationModel* model = nullptr;
    std::vector<TiltedSampler> samplers;
    Frame frame;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    ConvolutionMethod method = ConvolutionMethod::Auto;
};

Setup make_setup(std::span<const double> g, const InnovationModel& model,
                 const TiltSchedule* schedule, const Frame& frame, const SimConfig& cfg) {
    Setup st;
    st.g = g;
    st.model = &model;
    st.frame = frame;
    st.n = path_length(frame, cfg);
    st.seed = level_seed(cfg.seed, frame.t);
    st.method = cfg.convolution;
    if (!(frame.v_t > 0.0) || !(frame.tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "frame needs v_t > 0 and tau > 0");
    }
    if (g.size() < st.n) {
        throw Error(ErrorKind::InvalidArgument, "coefficient stream does not cover the path length");
    }
    if (schedule) {
        const std::size_t tilted = std::min(schedule->horizon, st.n);
        st.samplers.reserve(tilted);
        for (std::size_t i = 1; i <= tilted; ++i) {
            const double l = schedule->lambda(i);
            if (!st.samplers.empty() && st.samplers.back().lambda() == l) {
                st.samplers.push_back(st.samplers.back());
            } else {
                st.samplers.push_back(model.tilted_sampler(l));
            }
        }
    }
    return st;
}

// Draws the innovations of one replication, runs the convolution and
// returns log W (0 under crude sampling).
double run_replication(const Setup& st, PathConvolver& conv, Workspace& ws, std::size_t index) {
    Rng rng(st.seed, index);
    double log_w = 0.0;
    const std::size_t tilted = st.samplers.size();
    for (std::size_t i = 0; i < st.n; ++i) {
        if (i < tilted) {
            const auto& smp = st.samplers[i];
            const double xi = smp.draw(rng);
            ws.x[i] = xi;
            log_w += smp.log_mgf() - smp.lambda() * xi;
        } else {
            ws.x[i] = st.model->sample(rng);
        }
    }
    conv.run(ws.x, ws.s);
    return log_w;
}

std::size_t first_passage(const std::vector<double>& s, std::size_t n, double t) {
    for (std::size_t k = 0; k < n; ++k) {
        if (s[k] > t) return k + 1;
    }
    return 0;
}

struct Accum {
    numerics::CompensatedSum y;
    numerics::CompensatedSum y2;
    std::size_t hits = 0;
    std::size_t overflow = 0;
    double w_hit = 0.0;
    double w2_hit = 0.0;
    double late_w = 0.0;
    std::vector<double> nt;
    std::vector<double> ntw;
    std::vector<double> path_sum = std::vector<double>(kPathGridPoints, 0.0);
    std::vector<double> path_w = std::vector<double>(kPathGridPoints, 0.0);
    std::vector<double> innov_sum = std::vector<double>(kInnovBins, 0.0);
    std::vector<double> innov_w = std::vector<double>(kInnovBins, 0.0);

    void merge(const Accum& o) {
        y.add(o.y.value());
        y2.add(o.y2.value());
        hits += o.hits;
        overflow += o.overflow;
        w_hit += o.w_hit;
        w2_hit += o.w2_hit;
        late_w += o.late_w;
        nt.insert(nt.end(), o.nt.begin(), o.nt.end());
        ntw.insert(ntw.end(), o.ntw.begin(), o.ntw.end());
        for (std::size_t j = 0; j < kPathGridPoints; ++j) {
            path_sum[j] += o.path_sum[j];
            path_w[j] += o.path_w[j];
        }
        for (std::size_t b = 0; b < kInnovBins; ++b) {
            innov_sum[b] += o.innov_sum[b];
            innov_w[b] += o.innov_w[b];
        }
    }
};

void record(const Setup& st, const Workspace& ws, double log_w, Accum& acc) {
    const std::size_t fp = first_passage(ws.s, st.n, st.frame.t);
    if (fp == 0) return;
    if (std::abs(log_w) > kLogWeightLimit) {
        ++acc.overflow;
        return;
    }
    const double w = std::exp(log_w);
    ++acc.hits;
    acc.y.add(w);
    acc.y2.add(w * w);
    acc.w_hit += w;
    acc.w2_hit += w * w;
    const double v_t = st.frame.v_t;
    acc.nt.push_back(static_cast<double>(fp) / v_t);
    acc.ntw.push_back(w);
    if (static_cast<double>(fp) > 0.9 * static_cast<double>(st.n)) acc.late_w += w;

    const double span = 2.0 * st.frame.tau;
    for (std::size_t j = 0; j < kPathGridPoints; ++j) {
        const double lambda = span * static_cast<double>(j) / static_cast<double>(kPathGridPoints - 1);
        const auto idx = static_cast<std::size_t>(std::floor(lambda * v_t));
        if (idx > st.n) continue;
        const double value = idx == 0 ? 0.0 : ws.s[idx - 1] / st.frame.t;
        acc.path_sum[j] += w * value;
        acc.path_w[j] += w;
    }
    const double bin_width = span / static_cast<double>(kInnovBins);
    for (std::size_t i = 1; i <= st.n; ++i) {
        const double v = static_cast<double>(i) / v_t;
        const auto b = static_cast<std::size_t>(v / bin_width);
        if (b >= kInnovBins) break;
        acc.innov_sum[b] += w * ws.x[i - 1];
        acc.innov_w[b] += w;
    }
}

EstimateResult run_estimator(std::span<const double> g, const InnovationModel& model,
                             const TiltSchedule* schedule, const Frame& frame, const SimConfig& cfg) {
    cfg.validate();
    const Setup st = make_setup(g, model, schedule, frame, cfg);
    const std::size_t reps = cfg.replications;
    const std::size_t chunks = (reps + kChunkSize - 1) / kChunkSize;
    std::vector<Accum> parts(chunks);

    unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        try {
            PathConvolver conv(st.g, st.n, st.method);
            Workspace ws{std::vector<double>(st.n), std::vector<double>(st.n)};
            for (std::size_t c = next++; c < chunks; c = next++) {
                const std::size_t begin = c * kChunkSize;
                const std::size_t end = std::min(reps, begin + kChunkSize);
                for (std::size_t r = begin; r < end; ++r) {
                    const double log_w = run_replication(st, conv, ws, r);
                    record(st, ws, log_w, parts[c]);
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = chunks;
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    Accum total;
    for (const auto& p : parts) total.merge(p);

    EstimateResult r;
    r.estimator = schedule ? Estimator::Tilted : Estimator::Crude;
    r.t = frame.t;
    r.v_t = frame.v_t;
    r.tau = frame.tau;
    r.path_length = st.n;
    r.replications = reps;
    r.hits = total.hits;
    r.weight_overflow = total.overflow;
    const double n = static_cast<double>(reps);
    r.p_hat = total.y.value() / n;
    if (reps > 1) {
        const double var = std::max(0.0, (total.y2.value() - n * r.p_hat * r.p_hat) / (n - 1.0));
        r.std_err = std::sqrt(var / n);
    }
    r.ci_low = std::clamp(r.p_hat - 3.0 * r.std_err, 0.0, 1.0);
    r.ci_high = std::clamp(r.p_hat + 3.0 * r.std_err, 0.0, 1.0);
    if (r.hits > 0 && r.p_hat > 0.0) r.log_p = std::log(r.p_hat);
    if (total.w2_hit > 0.0) r.ess = total.w_hit * total.w_hit / total.w2_hit;
    if (total.w_hit > 0.0) r.late_crossing_fraction = total.late_w / total.w_hit;
    r.n_t_samples = std::move(total.nt);
    r.n_t_weights = std::move(total.ntw);
    r.median_n_t = weighted_median(r.n_t_samples, r.n_t_weights);

    const double span = 2.0 * frame.tau;
    r.path_bins.resize(kPathGridPoints);
    for (std::size_t j = 0; j < kPathGridPoints; ++j) {
        auto& b = r.path_bins[j];
        b.center = span * static_cast<double>(j) / static_cast<double>(kPathGridPoints - 1);
        b.weight_sum = total.path_w[j];
        b.mean = b.weight_sum > 0.0 ? total.path_sum[j] / b.weight_sum : 0.0;
    }
    const double bin_width = span / static_cast<double>(kInnovBins);
    r.innov_bins.resize(kInnovBins);
    for (std::size_t k = 0; k < kInnovBins; ++k) {
        auto& b = r.innov_bins[k];
        b.center = (static_cast<double>(k) + 0.5) * bin_width;
        b.weight_sum = total.innov_w[k];
        b.mean = b.weight_sum > 0.0 ? total.innov_sum[k] / b.weight_sum : 0.0;
    }

    if (r.hits == 0) r.warnings.push_back("ZeroHits: no replication crossed t; log_p is undefined");
    if (r.weight_overflow > 0) {
        r.warnings.push_back("WeightOverflow: " + std::to_string(r.weight_overflow) +
                             " hitting replications dropped with |log W| > 700");
    }
    if (r.late_crossing_fraction > 0.01) {
        r.warnings.push_back("LateCrossings: " + std::to_string(100.0 * r.late_crossing_fraction) +
                             "% of crossings in the final 10% of the path; the horizon may truncate");
    }
    if (schedule) {
        for (const auto& w : schedule->warnings) r.warnings.push_back(w);
    }
    return r;
}

}  // namespace

ReplicationTrace trace_replication(std::span<const double> g, const InnovationModel& model,
                                   const TiltSchedule* schedule, const Frame& frame,
                                   const SimConfig& cfg, std::size_t index) {
    const Setup st = make_setup(g, model, schedule, frame, cfg);
    PathConvolver conv(st.g, st.n, st.method);
    Workspace ws{std::vector<double>(st.n), std::vector<double>(st.n)};
    ReplicationTrace tr;
    tr.log_weight = run_replication(st, conv, ws, index);
    tr.first_passage = first_passage(ws.s, st.n, frame.t);
    tr.hit = tr.first_passage > 0;
    tr.x = std::move(ws.x);
    tr.s = std::move(ws.s);
    return tr;
}

EstimateResult estimate_crude(std::span<const double> g, const InnovationModel& model,
                              const Frame& frame, const SimConfig& cfg) {
    return run_estimator(g, model, nullptr, frame, cfg);
}

EstimateResult estimate_tilted(std::span<const double> g, const InnovationModel& model,
                               const TiltSchedule& schedule, const SimConfig& cfg) {
    return run_estimator(g, model, &schedule, frame_of(schedule), cfg);
}

}  // namespace gfruin

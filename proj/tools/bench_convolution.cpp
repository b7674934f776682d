#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "gfruin/kernel_coeffs.hpp"
#include "gfruin/simulator.hpp"

using Clock = std::chrono::steady_clock;

int main(int argc, char** argv) {
    CLI::App app{"Direct vs FFT path convolution"};
    std::size_t log2n = 16;
    int repeats = 3;
    double gamma = 0.8;
    app.add_option("--log2n", log2n, "Path length 2^k")->check(CLI::Range(4, 22));
    app.add_option("--repeats", repeats, "Timed runs per method (best is kept)")->check(CLI::PositiveNumber);
    app.add_option("--gamma", gamma, "FARIMA exponent of g")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::size_t n = std::size_t{1} << log2n;
    gfruin::GFunction g;
    g.gamma = gamma;
    const auto stream = gfruin::taylor_coeffs(g, n);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> z(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = z(gen);

    auto time_method = [&](gfruin::ConvolutionMethod m, std::vector<double>& s) {
        gfruin::PathConvolver conv(stream.coeffs(), n, m);
        double best = INFINITY;
        for (int r = 0; r < repeats; ++r) {
            const auto t0 = Clock::now();
            conv.run(x, s);
            best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
        }
        return best;
    };
    std::vector<double> sd(n), sf(n);
    const double td = time_method(gfruin::ConvolutionMethod::Direct, sd);
    const double tf = time_method(gfruin::ConvolutionMethod::Fft, sf);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err = std::max(err, std::abs(sd[i] - sf[i]));
        scale = std::max(scale, std::abs(sd[i]));
    }
    fmt::print("n={} direct={:.6f}s fft={:.6f}s speedup={:.1f} max_abs_diff={:.3e} max_abs={:.3e}\n", n, td, tf,
               td / tf, err, scale);
    return 0;
}

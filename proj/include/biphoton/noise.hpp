#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "biphoton/grid.hpp"
#include "biphoton/tomography.hpp"

// Measurement realism: the on-chip filter response blurs the ideal
// interferograms, coincidence counting adds Poisson shot noise, and the
// recorded maps are smoothed before phase extraction.

namespace biphoton {

struct NoiseConfig {
    double pairs_per_setting = 1e5;  // expected detected pairs per phase setting
    std::uint64_t seed = 1;
    double dark_rate_fraction = 0.0;  // uniform background, fraction of the peak rate

    void validate() const {
        if (!(pairs_per_setting >= 0.0))
            throw std::invalid_argument("NoiseConfig: pairs_per_setting must be >= 0");
        if (!(dark_rate_fraction >= 0.0))
            throw std::invalid_argument("NoiseConfig: dark_rate_fraction must be >= 0");
    }
};

enum class FilterShape { lorentzian, gaussian };

struct FilterResponse {
    FilterShape shape = FilterShape::lorentzian;
    double fwhm_hz = 0.0;

    void validate() const {
        if (!(fwhm_hz > 0.0)) throw std::invalid_argument("FilterResponse: fwhm must be positive");
    }
};

namespace detail {

inline std::vector<double> filter_kernel(const FilterResponse& f, double step_hz, int n) {
    // Full-extent kernel (offsets -(n-1)..n-1), normalized to unit sum.
    std::vector<double> k(2 * n - 1, 0.0);
    double total = 0.0;
    for (int d = -(n - 1); d <= n - 1; ++d) {
        const double x = d * step_hz;
        double v;
        if (f.shape == FilterShape::lorentzian) {
            const double hwhm = 0.5 * f.fwhm_hz;
            v = 1.0 / (1.0 + (x / hwhm) * (x / hwhm));
        } else {
            v = std::exp(-4.0 * std::numbers::ln2 * (x / f.fwhm_hz) * (x / f.fwhm_hz));
        }
        k[d + n - 1] = v;
        total += v;
    }
    for (auto& v : k) v /= total;
    return k;
}

// Mass-conserving 1D pass: each source pixel scatters its value through the
// kernel, renormalized over the part of the kernel that stays on the grid.
// The total sum is preserved exactly.
inline void scatter_convolve_axis(const RealField2D& in, RealField2D& out,
                                  const std::vector<double>& kernel, int n, int stride,
                                  int lines, int line_stride) {
    const int half = n - 1;
    std::vector<double> weight(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double w = 0.0;
        for (int d = -half; d <= half; ++d) {
            const int t = j + d;
            if (t >= 0 && t < n) w += kernel[d + half];
        }
        weight[j] = w;
    }
    for (int line = 0; line < lines; ++line) {
        const std::size_t base = static_cast<std::size_t>(line) * line_stride;
        for (int j = 0; j < n; ++j) {
            const double v = in.values[base + static_cast<std::size_t>(j) * stride] / weight[j];
            if (v == 0.0) continue;
            const int lo = std::max(-half, -j), hi = std::min(half, n - 1 - j);
            for (int d = lo; d <= hi; ++d)
                out.values[base + static_cast<std::size_t>(j + d) * stride] += v * kernel[d + half];
        }
    }
}

}  // namespace detail

// Separable convolution with the signal- and idler-axis filter responses.
inline Interferogram apply_instrument_response(const Interferogram& p,
                                               const FilterResponse& filter_signal,
                                               const FilterResponse& filter_idler) {
    filter_signal.validate();
    filter_idler.validate();
    const auto& g = p.map.grid;
    if (!(filter_signal.fwhm_hz < g.span_signal_hz && filter_idler.fwhm_hz < g.span_idler_hz))
        throw std::invalid_argument("apply_instrument_response: filter wider than grid span");

    const auto ks = detail::filter_kernel(filter_signal, g.signal_step_hz(), g.n_signal);
    const auto ki = detail::filter_kernel(filter_idler, g.idler_step_hz(), g.n_idler);

    Interferogram stage = p;
    std::fill(stage.map.values.begin(), stage.map.values.end(), 0.0);
    detail::scatter_convolve_axis(p.map, stage.map, ks, g.n_signal, 1, g.n_idler, g.n_signal);

    Interferogram out = stage;
    std::fill(out.map.values.begin(), out.map.values.end(), 0.0);
    // Idler pass: each signal column is one line with stride n_signal.
    detail::scatter_convolve_axis(stage.map, out.map, ki, g.n_idler, g.n_signal, g.n_signal, 1);
    return out;
}

// --- deterministic counting statistics ------------------------------------

namespace rng {

// SplitMix64; one independent stream per (seed, stream, pixel) triple.
struct Stream {
    std::uint64_t state;

    explicit Stream(std::uint64_t seed) : state(seed) {}
    Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t pixel)
        : state(mix(mix(mix(0x9e3779b97f4a7c15ULL ^ seed) + stream) + pixel)) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double next_double() {  // uniform in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
};

// Poisson sampling: sequential inversion for small means, PTRS transformed
// rejection (Hormann) above.
inline std::uint64_t poisson(double lambda, Stream& s) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) {
        const double l = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= s.next_double();
        } while (p > l);
        return k - 1;
    }
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = s.next_double() - 0.5;
        const double v = s.next_double();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -lambda + kf * loglam - std::lgamma(kf + 1.0))
            return static_cast<std::uint64_t>(kf);
    }
}

}  // namespace rng

namespace detail {

inline RealField2D sample_counts_impl(const Interferogram& p, const NoiseConfig& n,
                                      double lambda_per_unit, std::uint64_t stream) {
    RealField2D counts(p.map.grid);
    double lambda_max = 0.0;
    for (double v : p.map.values) {
        if (v < 0.0) throw std::invalid_argument("sample_counts: negative interferogram value");
        lambda_max = std::max(lambda_max, v * lambda_per_unit);
    }
    const double dark = n.dark_rate_fraction * lambda_max;
    for (std::size_t k = 0; k < counts.values.size(); ++k) {
        const double lambda = p.map.values[k] * lambda_per_unit + dark;
        if (lambda <= 0.0) continue;
        rng::Stream s(n.seed, stream, k);
        counts.values[k] = static_cast<double>(rng::poisson(lambda, s));
    }
    return counts;
}

}  // namespace detail

// Poisson samples one interferogram, normalized so the expected total equals
// pairs_per_setting. Reproducible: each pixel draws from its own stream
// derived from (seed, pixel).
inline RealField2D sample_counts(const Interferogram& p, const NoiseConfig& n) {
    n.validate();
    double total = 0.0;
    for (double v : p.map.values) total += v;
    if (total <= 0.0 || n.pairs_per_setting == 0.0) return RealField2D(p.map.grid);
    return detail::sample_counts_impl(p, n, n.pairs_per_setting / total, 0);
}

// Samples a full quartet with one shared exposure constant, preserving the
// relative scale between the four settings that the phase extraction relies
// on. Settings use independent streams (they are measured sequentially).
inline std::array<RealField2D, 4> sample_run_counts(const TomographyRun& run,
                                                    const NoiseConfig& n) {
    n.validate();
    double mean_total = 0.0;
    for (const auto& f : run.frames)
        for (double v : f.map.values) mean_total += v;
    mean_total /= 4.0;
    std::array<RealField2D, 4> out;
    if (mean_total <= 0.0 || n.pairs_per_setting == 0.0) {
        for (int k = 0; k < 4; ++k) out[k] = RealField2D(run.frames[k].map.grid);
        return out;
    }
    const double scale = n.pairs_per_setting / mean_total;
    for (int k = 0; k < 4; ++k)
        out[k] = detail::sample_counts_impl(run.frames[k], n, scale,
                                            static_cast<std::uint64_t>(k));
    return out;
}

// --- post-processing smoothing --------------------------------------------

namespace detail {

inline int reflect_index(int i, int n) {
    // Symmetric reflection: -1 -> 0, n -> n-1.
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline RealField2D separable_smooth(const RealField2D& in, const std::vector<double>& kernel) {
    const auto& g = in.grid;
    const int half = static_cast<int>(kernel.size()) / 2;
    RealField2D tmp(g), out(g);
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i) {
            double acc = 0.0;
            for (int d = -half; d <= half; ++d)
                acc += kernel[d + half] * in.at(reflect_index(i + d, g.n_signal), j);
            tmp.at(i, j) = acc;
        }
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i) {
            double acc = 0.0;
            for (int d = -half; d <= half; ++d)
                acc += kernel[d + half] * tmp.at(i, reflect_index(j + d, g.n_idler));
            out.at(i, j) = acc;
        }
    return out;
}

}  // namespace detail

// Gaussian smoothing with mirror-reflect boundaries; sigma = 0 is the identity.
inline RealField2D gaussian_filter2d(const RealField2D& field, double sigma_px) {
    if (sigma_px < 0.0) throw std::invalid_argument("gaussian_filter2d: sigma must be >= 0");
    if (sigma_px == 0.0) return field;
    const int half = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_px)));
    std::vector<double> kernel(2 * half + 1);
    double total = 0.0;
    for (int d = -half; d <= half; ++d) {
        kernel[d + half] = std::exp(-0.5 * (d / sigma_px) * (d / sigma_px));
        total += kernel[d + half];
    }
    for (auto& v : kernel) v /= total;
    return detail::separable_smooth(field, kernel);
}

// Uniform moving average with an odd window; window = 1 is the identity.
inline RealField2D moving_average2d(const RealField2D& field, int window_px) {
    if (window_px < 1 || window_px % 2 == 0)
        throw std::invalid_argument("moving_average2d: window must be odd and >= 1");
    if (window_px == 1) return field;
    std::vector<double> kernel(window_px, 1.0 / window_px);
    return detail::separable_smooth(field, kernel);
}

}  // namespace biphoton

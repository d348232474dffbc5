#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace biphoton {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Composite Simpson on an interval, doubling the interval count until the
// estimate changes by less than rel_tol in magnitude. Samples are kept across
// refinements, so each level only evaluates the new midpoints.
template <typename F>
std::complex<double> integrate_adaptive_simpson(F&& f, double lo, double hi,
                                                double rel_tol = 1e-6,
                                                int initial_intervals = 64,
                                                int max_intervals = 1 << 20,
                                                int* intervals_used = nullptr) {
    if (!(hi > lo)) throw std::invalid_argument("integrate_adaptive_simpson: empty interval");
    if (initial_intervals < 2 || initial_intervals % 2 != 0)
        throw std::invalid_argument("integrate_adaptive_simpson: initial_intervals must be even and >= 2");

    int n = initial_intervals;
    std::vector<std::complex<double>> samples(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        samples[i] = f(lo + (hi - lo) * i / n);

    auto simpson_sum = [&](int intervals) {
        const double h = (hi - lo) / intervals;
        std::complex<double> acc = samples[0] + samples[static_cast<std::size_t>(intervals)];
        for (int i = 1; i < intervals; ++i)
            acc += samples[i] * ((i % 2 == 1) ? 4.0 : 2.0);
        return acc * (h / 3.0);
    };

    std::complex<double> prev = simpson_sum(n);
    double rel_change = 0.0;
    while (n < max_intervals) {
        // Double the grid: old samples land on even indices, midpoints are new.
        std::vector<std::complex<double>> refined(static_cast<std::size_t>(2 * n) + 1);
        for (int i = 0; i <= n; ++i) refined[2 * i] = samples[i];
        for (int i = 0; i < n; ++i)
            refined[2 * i + 1] = f(lo + (hi - lo) * (2 * i + 1) / (2.0 * n));
        samples = std::move(refined);
        n *= 2;

        const std::complex<double> cur = simpson_sum(n);
        const double mag = std::abs(cur);
        rel_change = std::abs(cur - prev);
        if (mag > 0.0) rel_change /= mag;
        prev = cur;
        if (rel_change <= rel_tol) {
            if (intervals_used) *intervals_used = n;
            return cur;
        }
    }

    std::ostringstream msg;
    msg << "integrate_adaptive_simpson: no convergence after " << n
        << " intervals (relative change " << rel_change << " > tolerance " << rel_tol << ")";
    throw QuadratureError(msg.str());
}

// Plain composite trapezoid with a fixed point count.
template <typename F>
std::complex<double> integrate_trapezoid(F&& f, double lo, double hi, int points) {
    if (points < 2) throw std::invalid_argument("integrate_trapezoid: need >= 2 points");
    const double h = (hi - lo) / (points - 1);
    std::complex<double> acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < points - 1; ++i) acc += f(lo + h * i);
    return acc * h;
}

}  // namespace biphoton

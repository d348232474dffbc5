#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "biphoton/grid.hpp"
#include "biphoton/units.hpp"

// Two-source interference. The pump splitter sends a fraction eta of the pump
// power to the waveguide arm and 1-eta to the ring arm; a thermo-optic phase
// theta sits on the ring arm. Constant circuit phases are absorbed into theta
// throughout.

namespace biphoton {

struct SplitterSetting {
    double eta = 0.5;
    double theta_rad = 0.0;

    SplitterSetting() = default;
    SplitterSetting(double e, double th) : eta(e), theta_rad(th) {
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("SplitterSetting: eta must lie in [0, 1]");
    }
};

// Normalized superposition weights of the two pair-generation amplitudes,
// |n_ring|^2 + |n_waveguide|^2 = 1.
struct SourceAmplitudes {
    std::complex<double> n_ring{0.0, 0.0};
    std::complex<double> n_waveguide{0.0, 0.0};
};

// Pair amplitude scales with the pump power in each arm (two pump photons per
// pair): n_waveguide ~ eta, n_ring ~ (1 - eta) * brightness_ratio, normalized.
inline SourceAmplitudes weights_from_eta(double eta, double brightness_ratio = 1.0) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("weights_from_eta: eta must lie in [0, 1]");
    if (!(brightness_ratio > 0.0))
        throw std::invalid_argument("weights_from_eta: brightness_ratio must be positive");
    const double nw = eta;
    const double nr = (1.0 - eta) * brightness_ratio;
    const double norm = std::sqrt(nw * nw + nr * nr);
    if (norm == 0.0)
        throw std::invalid_argument("weights_from_eta: both weights vanish");
    return {nr / norm, nw / norm};
}

namespace detail {

inline void require_same_grid(const ComplexField2D& a, const ComplexField2D& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("interference: grid mismatch between fields");
}

template <typename Combine>
Interferogram interfere(const ComplexField2D& phi_ring, const ComplexField2D& phi_wg,
                        const SplitterSetting& s, const SourceAmplitudes& w,
                        Combine&& combine) {
    require_same_grid(phi_ring, phi_wg);
    Interferogram out;
    out.map = RealField2D(phi_ring.grid);
    out.theta_rad = s.theta_rad;
    out.eta = s.eta;
    for (std::size_t k = 0; k < phi_ring.values.size(); ++k)
        out.map.values[k] = combine(w.n_ring * phi_ring.values[k],
                                    w.n_waveguide * phi_wg.values[k]);
    return out;
}

}  // namespace detail

// Coincidence probability of the biphoton superposition,
//   P = 1/4 |n_R Phi_R e^{i 2 theta} + n_W Phi_W|^2.
// Both photons traverse the phase shifter, hence the doubled phase and the
// pi-periodic fringe.
inline Interferogram coincidence_probability(const ComplexField2D& phi_ring,
                                             const ComplexField2D& phi_wg,
                                             const SplitterSetting& s,
                                             const SourceAmplitudes& w) {
    const auto rot = std::polar(1.0, 2.0 * s.theta_rad);
    return detail::interfere(phi_ring, phi_wg, s, w, [rot](auto a, auto b) {
        return 0.25 * std::norm(a * rot + b);
    });
}

// The complementary output of the final splitter; with the port above it sums
// to a theta-independent total.
inline Interferogram coincidence_probability_complement(const ComplexField2D& phi_ring,
                                                        const ComplexField2D& phi_wg,
                                                        const SplitterSetting& s,
                                                        const SourceAmplitudes& w) {
    const auto rot = std::polar(1.0, 2.0 * s.theta_rad);
    return detail::interfere(phi_ring, phi_wg, s, w, [rot](auto a, auto b) {
        return 0.25 * std::norm(a * rot - b);
    });
}

// Single-photon-equivalent fringe: same superposition with e^{i theta}, giving
// the ordinary 2pi period.
inline Interferogram classical_fringe(const ComplexField2D& phi_ring,
                                      const ComplexField2D& phi_wg,
                                      const SplitterSetting& s, const SourceAmplitudes& w) {
    const auto rot = std::polar(1.0, s.theta_rad);
    return detail::interfere(phi_ring, phi_wg, s, w, [rot](auto a, auto b) {
        return 0.25 * std::norm(a * rot + b);
    });
}

// Seeded-idler interference behind the final splitter,
//   I = 1/4 |n_R F_R e^{i theta} + i n_W F_W|^2.
// The classical seed passes the phase shifter once (single theta) and the
// splitter contributes a fixed factor i on the waveguide term.
inline Interferogram set_interference(const ComplexField2D& f_ring,
                                      const ComplexField2D& f_wg,
                                      const SplitterSetting& s, const SourceAmplitudes& w) {
    const auto rot = std::polar(1.0, s.theta_rad);
    const std::complex<double> iu(0.0, 1.0);
    return detail::interfere(f_ring, f_wg, s, w, [rot, iu](auto a, auto b) {
        return 0.25 * std::norm(a * rot + iu * b);
    });
}

// 50:50 splitter acting on an amplitude pair: (c, d) -> ((c + i d), (i c + d))/sqrt(2).
inline std::pair<std::complex<double>, std::complex<double>> beamsplitter_transform(
    std::complex<double> c, std::complex<double> d) {
    const std::complex<double> iu(0.0, 1.0);
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    return {(c + iu * d) * inv_sqrt2, (iu * c + d) * inv_sqrt2};
}

// Sinusoid fitted to fringe samples: mean + amplitude * cos(2pi theta / period + phase).
struct FringeFit {
    double mean = 0.0;
    double amplitude = 0.0;
    double period = 0.0;
    double phase = 0.0;
    double residual_rms = 0.0;

    double visibility() const { return mean > 0.0 ? amplitude / mean : 0.0; }
};

namespace detail {

// For a fixed trial period, the best mean/cos/sin coefficients are a linear
// least-squares problem; solve the 3x3 normal equations directly.
inline double fringe_residual(std::span<const double> thetas, std::span<const double> values,
                              double period, double coeffs[3]) {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    const double omega = kTwoPi / period;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double basis[3] = {1.0, std::cos(omega * thetas[k]), std::sin(omega * thetas[k])};
        for (int r = 0; r < 3; ++r) {
            rhs[r] += basis[r] * values[k];
            for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
        }
    }
    for (int r = 0; r < 3; ++r) m[r][r] += 1e-12;  // guard near-degenerate trial periods

    // Gaussian elimination with partial pivoting.
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[perm[r]][col] / m[perm[col]][col];
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * coeffs[c];
        coeffs[col] = acc / m[perm[col]][col];
    }

    double ss = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double model = coeffs[0] + coeffs[1] * std::cos(omega * thetas[k]) +
                             coeffs[2] * std::sin(omega * thetas[k]);
        const double r = values[k] - model;
        ss += r * r;
    }
    return ss;
}

}  // namespace detail

// Fits mean, amplitude, and period to fringe samples. The period is found by
// a dense scan over candidate periods followed by golden-section refinement;
// the linear coefficients are re-solved at every trial.
inline FringeFit fit_fringe(std::span<const double> thetas, std::span<const double> values) {
    if (thetas.size() != values.size())
        throw std::invalid_argument("fit_fringe: sample size mismatch");
    if (thetas.size() < 8)
        throw std::invalid_argument("fit_fringe: need at least 8 samples");
    double lo_theta = thetas[0], hi_theta = thetas[0];
    for (double t : thetas) {
        lo_theta = std::min(lo_theta, t);
        hi_theta = std::max(hi_theta, t);
    }
    const double range = hi_theta - lo_theta;
    if (!(range > 0.0)) throw std::invalid_argument("fit_fringe: degenerate theta range");

    const double p_min = range / 8.0, p_max = 2.0 * range;
    const int scan = 512;
    double best_p = p_min, best_ss = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= scan; ++k) {
        const double p = p_min * std::pow(p_max / p_min, static_cast<double>(k) / scan);
        double c[3];
        const double ss = detail::fringe_residual(thetas, values, p, c);
        if (ss < best_ss) {
            best_ss = ss;
            best_p = p;
        }
    }

    // Golden-section refinement around the scan minimum.
    const double ratio = std::pow(p_max / p_min, 1.0 / scan);
    double a = best_p / ratio, b = best_p * ratio;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double c1[3], c2[3];
    double f1 = detail::fringe_residual(thetas, values, x1, c1);
    double f2 = detail::fringe_residual(thetas, values, x2, c2);
    for (int it = 0; it < 120 && (b - a) > 1e-12 * best_p; ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a);
            f1 = detail::fringe_residual(thetas, values, x1, c1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a);
            f2 = detail::fringe_residual(thetas, values, x2, c2);
        }
    }
    const double period = f1 < f2 ? x1 : x2;

    double coeffs[3];
    const double ss = detail::fringe_residual(thetas, values, period, coeffs);
    FringeFit fit;
    fit.mean = coeffs[0];
    fit.amplitude = std::hypot(coeffs[1], coeffs[2]);
    fit.period = period;
    fit.phase = std::atan2(-coeffs[2], coeffs[1]);
    fit.residual_rms = std::sqrt(ss / static_cast<double>(thetas.size()));
    return fit;
}

// (max - min)/(max + min) of the fitted sinusoid.
inline double fringe_visibility(std::span<const double> thetas, std::span<const double> values) {
    return fit_fringe(thetas, values).visibility();
}

}  // namespace biphoton

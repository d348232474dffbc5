#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "biphoton/grid.hpp"
#include "biphoton/parallel.hpp"
#include "biphoton/quadrature.hpp"
#include "biphoton/spectral.hpp"
#include "biphoton/units.hpp"

// Forward models for the two photon-pair sources: a micro-ring resonator
// (spontaneous and seeded four-wave mixing) and a straight waveguide used as
// the flat-phase reference.
//
// Linewidth convention, used everywhere in this header:
//   The resonator response enters as  gamma* / (sqrt(L) * (2pi(nu_k - nu) +/- i Gamma_k)),
//   with Gamma_k in rad/s. |F|^2 drops to half its on-resonance value at
//   |2pi(nu_k - nu)| = Gamma_k, so the transmission FWHM in Hz is Gamma_k / pi.
//   Converting a measured linewidth:  Gamma_k = pi * FWHM_Hz.
// Coupling convention:
//   The escape efficiency of mode k is |gamma_k|^2 / (2 Gamma_k) and must not
//   exceed 1. gamma_k = sqrt(2 * Gamma_k * escape) reproduces a requested
//   escape efficiency with a real, positive coupling coefficient.

namespace biphoton {

enum class PumpShape { gaussian, sech2 };

// Pulsed pump described in the spectral domain. duration_fwhm_s is the FWHM
// of the temporal intensity profile; the transform-limited spectral intensity
// FWHM follows from the shape's time-bandwidth product (0.4413 for Gaussian,
// 0.3148 for sech^2). chirp adds a quadratic spectral phase.
struct PumpSpectrum {
    double center_hz = 0.0;
    double duration_fwhm_s = 0.0;
    PumpShape shape = PumpShape::gaussian;
    double chirp_rad_per_hz2 = 0.0;
    double amplitude_scale = 1.0;

    PumpSpectrum() = default;
    PumpSpectrum(double center, double duration, PumpShape sh = PumpShape::gaussian,
                 double chirp = 0.0, double scale = 1.0)
        : center_hz(center),
          duration_fwhm_s(duration),
          shape(sh),
          chirp_rad_per_hz2(chirp),
          amplitude_scale(scale) {
        if (!(duration_fwhm_s > 0.0))
            throw std::invalid_argument("PumpSpectrum: duration must be positive");
    }

    double spectral_intensity_fwhm_hz() const {
        const double ln1p_sqrt2 = std::log(1.0 + std::numbers::sqrt2);
        const double tbp = shape == PumpShape::gaussian
                               ? 2.0 * std::numbers::ln2 / kPi
                               : (2.0 * ln1p_sqrt2) * (2.0 * ln1p_sqrt2) / (kPi * kPi);
        return tbp / duration_fwhm_s;
    }

    // Half-width of the quadrature window; wide enough that the envelope
    // magnitude has fallen below 1e-6 of its peak at the edges (the sech^2
    // spectrum decays only exponentially, hence the wider factor).
    double integration_halfwidth_hz() const {
        const double factor = shape == PumpShape::gaussian ? 5.0 : 10.0;
        return factor * spectral_intensity_fwhm_hz();
    }
};

inline std::complex<double> pump_envelope(const PumpSpectrum& p, double nu_hz) {
    const double d = nu_hz - p.center_hz;
    const double fwhm = p.spectral_intensity_fwhm_hz();
    double mag;
    if (p.shape == PumpShape::gaussian) {
        const double x = d / fwhm;
        mag = std::exp(-2.0 * std::numbers::ln2 * x * x);
    } else {
        // |alpha(nu)| = sech(pi^2 tau nu) for a sech(t/tau) field.
        const double tau = p.duration_fwhm_s / (2.0 * std::log(1.0 + std::numbers::sqrt2));
        mag = 1.0 / std::cosh(kPi * kPi * tau * d);
    }
    const double phase = p.chirp_rad_per_hz2 * d * d;
    return p.amplitude_scale * std::polar(mag, phase);
}

// Ring resonator parameters. Gamma_* are half-linewidths in rad/s (see the
// convention block above); gamma_* are coupling coefficients; length is the
// geometric round-trip length.
struct RingParams {
    double nu_pump_hz = 0.0;
    double nu_signal_hz = 0.0;
    double nu_idler_hz = 0.0;
    std::complex<double> gamma_pump{0.0, 0.0};
    std::complex<double> gamma_signal{0.0, 0.0};
    std::complex<double> gamma_idler{0.0, 0.0};
    double Gamma_pump = 0.0;
    double Gamma_signal = 0.0;
    double Gamma_idler = 0.0;
    double length_m = 0.0;

    void validate() const {
        if (!(Gamma_pump > 0.0 && Gamma_signal > 0.0 && Gamma_idler > 0.0))
            throw std::invalid_argument("RingParams: half-linewidths must be positive");
        if (!(length_m > 0.0))
            throw std::invalid_argument("RingParams: length must be positive");
        for (double e : {escape_pump(), escape_signal(), escape_idler()})
            if (e > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "RingParams: escape efficiency |gamma|^2/(2 Gamma) exceeds 1");
    }

    double escape_pump() const { return std::norm(gamma_pump) / (2.0 * Gamma_pump); }
    double escape_signal() const { return std::norm(gamma_signal) / (2.0 * Gamma_signal); }
    double escape_idler() const { return std::norm(gamma_idler) / (2.0 * Gamma_idler); }

    // Builds parameters from measured quantities: transmission FWHM linewidths
    // in Hz (Gamma = pi * FWHM) and a common escape efficiency.
    static RingParams from_linewidths(double nu_pump, double nu_signal, double nu_idler,
                                      double fwhm_pump_hz, double fwhm_signal_hz,
                                      double fwhm_idler_hz, double escape_efficiency,
                                      double length_m) {
        RingParams r;
        r.nu_pump_hz = nu_pump;
        r.nu_signal_hz = nu_signal;
        r.nu_idler_hz = nu_idler;
        r.Gamma_pump = kPi * fwhm_pump_hz;
        r.Gamma_signal = kPi * fwhm_signal_hz;
        r.Gamma_idler = kPi * fwhm_idler_hz;
        r.gamma_pump = std::sqrt(2.0 * r.Gamma_pump * escape_efficiency);
        r.gamma_signal = std::sqrt(2.0 * r.Gamma_signal * escape_efficiency);
        r.gamma_idler = std::sqrt(2.0 * r.Gamma_idler * escape_efficiency);
        r.length_m = length_m;
        r.validate();
        return r;
    }
};

enum class ResonatorMode { pump, signal, idler };
enum class EnhancementSign { plus, minus };

// Resonant field enhancement
//   F_{k,+/-}(nu) = gamma_k^* / (sqrt(L) * (2pi(nu_k - nu) +/- i Gamma_k)).
inline std::complex<double> field_enhancement(const RingParams& r, ResonatorMode mode,
                                              EnhancementSign sign, double nu_hz) {
    double nu_res, Gamma;
    std::complex<double> gamma;
    switch (mode) {
        case ResonatorMode::pump:
            nu_res = r.nu_pump_hz; Gamma = r.Gamma_pump; gamma = r.gamma_pump; break;
        case ResonatorMode::signal:
            nu_res = r.nu_signal_hz; Gamma = r.Gamma_signal; gamma = r.gamma_signal; break;
        default:
            nu_res = r.nu_idler_hz; Gamma = r.Gamma_idler; gamma = r.gamma_idler; break;
    }
    const double s = sign == EnhancementSign::plus ? 1.0 : -1.0;
    const std::complex<double> denom(kTwoPi * (nu_res - nu_hz), s * Gamma);
    return std::conj(gamma) / (std::sqrt(r.length_m) * denom);
}

namespace detail {

// Pump-side integral shared by the spontaneous and stimulated ring JSAs: the
// energy-conservation delta collapses one pump integral, leaving
//   g(nu_tot) = int dnu alpha(nu) alpha(nu_tot - nu) F_{p-}(nu) F_{p-}(nu_tot - nu).
// The integrand is smooth and localized around the pump center, so adaptive
// composite Simpson over center +/- the envelope window converges quickly.
inline std::complex<double> pump_pair_integral(const RingParams& r, const PumpSpectrum& p,
                                               double nu_tot_hz, double rel_tol) {
    const double half = p.integration_halfwidth_hz();
    auto integrand = [&](double nu) {
        return pump_envelope(p, nu) * pump_envelope(p, nu_tot_hz - nu) *
               field_enhancement(r, ResonatorMode::pump, EnhancementSign::minus, nu) *
               field_enhancement(r, ResonatorMode::pump, EnhancementSign::minus,
                                 nu_tot_hz - nu);
    };
    return integrate_adaptive_simpson(integrand, p.center_hz - half, p.center_hz + half,
                                      rel_tol, 64);
}

inline void check_envelope_negligible(const PumpSpectrum& p) {
    const double half = p.integration_halfwidth_hz();
    const double edge = std::abs(pump_envelope(p, p.center_hz + half));
    const double peak = std::abs(pump_envelope(p, p.center_hz));
    if (!(edge < 1e-6 * peak))
        throw std::invalid_argument(
            "pump envelope does not decay below 1e-6 of peak at the integration bounds");
}

}  // namespace detail

struct JsaOptions {
    double quadrature_rel_tol = 1e-6;
    int threads = 1;
};

// Unnormalized spontaneous ring JSA at a single point.
inline std::complex<double> jsa_spontaneous_ring_point(const RingParams& r,
                                                       const PumpSpectrum& p,
                                                       double nu_s_hz, double nu_i_hz,
                                                       double rel_tol = 1e-6) {
    return detail::pump_pair_integral(r, p, nu_s_hz + nu_i_hz, rel_tol) *
           std::conj(field_enhancement(r, ResonatorMode::signal, EnhancementSign::plus, nu_s_hz)) *
           std::conj(field_enhancement(r, ResonatorMode::idler, EnhancementSign::plus, nu_i_hz));
}

// Unnormalized stimulated (seeded) ring JSA at a single point; the seed axis
// replaces the spontaneous signal factor with its opposite-sign counterpart.
inline std::complex<double> jsa_stimulated_ring_point(const RingParams& r,
                                                      const PumpSpectrum& p,
                                                      double nu_seed_hz, double nu_i_hz,
                                                      double rel_tol = 1e-6) {
    return detail::pump_pair_integral(r, p, nu_seed_hz + nu_i_hz, rel_tol) *
           std::conj(field_enhancement(r, ResonatorMode::signal, EnhancementSign::minus, nu_seed_hz)) *
           std::conj(field_enhancement(r, ResonatorMode::idler, EnhancementSign::plus, nu_i_hz));
}

namespace detail {

template <typename PointFn>
ComplexField2D evaluate_jsa(const FrequencyGrid& g, const JsaOptions& opt, PointFn&& point) {
    ComplexField2D field(g);
    parallel_for(0, g.n_idler, opt.threads, [&](int j) {
        const double nu_i = g.idler_hz(j);
        for (int i = 0; i < g.n_signal; ++i)
            field.at(i, j) = point(g.signal_hz(i), nu_i);
    });
    return normalize(field);
}

}  // namespace detail

inline ComplexField2D jsa_spontaneous_ring(const RingParams& r, const PumpSpectrum& p,
                                           const FrequencyGrid& g, const JsaOptions& opt = {}) {
    r.validate();
    detail::check_envelope_negligible(p);
    return detail::evaluate_jsa(g, opt, [&](double nu_s, double nu_i) {
        return jsa_spontaneous_ring_point(r, p, nu_s, nu_i, opt.quadrature_rel_tol);
    });
}

inline ComplexField2D jsa_stimulated_ring(const RingParams& r, const PumpSpectrum& p,
                                          const FrequencyGrid& g, const JsaOptions& opt = {}) {
    r.validate();
    detail::check_envelope_negligible(p);
    return detail::evaluate_jsa(g, opt, [&](double nu_s, double nu_i) {
        return jsa_stimulated_ring_point(r, p, nu_s, nu_i, opt.quadrature_rel_tol);
    });
}

// Straight-waveguide reference source. The effective index follows the
// compact model n_eff(lambda) = n1 + n2 (lambda - lambda0) + n3 (lambda - lambda0)^2
// with lambda in micrometres.
struct WaveguideParams {
    double length_m = 0.0;
    double group_index = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
    double n3 = 0.0;
    double lambda0_um = 1.55;

    void validate() const {
        if (!(length_m > 0.0))
            throw std::invalid_argument("WaveguideParams: length must be positive");
    }

    double effective_index(double nu_hz) const {
        const double lambda_um = kSpeedOfLight / nu_hz * 1e6;
        const double d = lambda_um - lambda0_um;
        return n1 + n2 * d + n3 * d * d;
    }

    // Propagation constant in rad/m.
    double wavenumber(double nu_hz) const {
        return kTwoPi * nu_hz * effective_index(nu_hz) / kSpeedOfLight;
    }
};

namespace detail {

// Phase mismatch for degenerate-pump four-wave mixing at the energy-conserving
// pump frequency (nu_s + nu_i)/2.
inline double waveguide_phase_mismatch(const WaveguideParams& w, double nu_s_hz,
                                       double nu_i_hz) {
    const double nu_p = 0.5 * (nu_s_hz + nu_i_hz);
    return 2.0 * w.wavenumber(nu_p) - w.wavenumber(nu_s_hz) - w.wavenumber(nu_i_hz);
}

inline std::complex<double> waveguide_jsa_point(const WaveguideParams& w,
                                                const PumpSpectrum& p, double nu_s_hz,
                                                double nu_i_hz, double rel_tol) {
    const double half = p.integration_halfwidth_hz();
    const double nu_tot = nu_s_hz + nu_i_hz;
    auto integrand = [&](double nu) {
        return pump_envelope(p, nu) * pump_envelope(p, nu_tot - nu);
    };
    const std::complex<double> psi = integrate_adaptive_simpson(
        integrand, p.center_hz - half, p.center_hz + half, rel_tol, 64);
    const double x = 0.5 * detail::waveguide_phase_mismatch(w, nu_s_hz, nu_i_hz) * w.length_m;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
    return psi * sinc * std::polar(1.0, x);
}

}  // namespace detail

// Reference JSA: pump autoconvolution times the waveguide phase-matching
// factor. The overall phase is referenced to the grid center, leaving only
// the (tiny) variation of the propagation phase across the grid.
inline ComplexField2D jsa_waveguide(const WaveguideParams& w, const PumpSpectrum& p,
                                    const FrequencyGrid& g, const JsaOptions& opt = {}) {
    w.validate();
    detail::check_envelope_negligible(p);
    const std::complex<double> center = detail::waveguide_jsa_point(
        w, p, g.center_signal_hz, g.center_idler_hz, opt.quadrature_rel_tol);
    const std::complex<double> deref =
        std::abs(center) > 0.0 ? std::polar(1.0, -std::arg(center)) : std::complex<double>(1.0);
    return detail::evaluate_jsa(g, opt, [&](double nu_s, double nu_i) {
        return detail::waveguide_jsa_point(w, p, nu_s, nu_i, opt.quadrature_rel_tol) * deref;
    });
}

}  // namespace biphoton

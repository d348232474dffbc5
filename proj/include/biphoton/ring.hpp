#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biphoton/units.hpp"

// All-pass ring transmission lineshapes and lineshape fitting. The coupler is
// an MZI acting as a variable splitter, so the self-coupling amplitude t is
// tunable; a is the round-trip amplitude. Transmission:
//   T(phi) = (a^2 - 2 t a cos phi + t^2) / (1 - 2 t a cos phi + (t a)^2),
// phi the round-trip phase. Note T is symmetric under swapping t and a, so a
// single magnitude spectrum cannot tell over- from under-coupling; the fit
// assigns the pair using a prior (or assumes over-coupling by default).

namespace biphoton {

struct CouplerSetting {
    double self_coupling_t = 0.0;
    double round_trip_a = 1.0;

    CouplerSetting() = default;
    CouplerSetting(double t, double a) : self_coupling_t(t), round_trip_a(a) {
        if (!(t >= 0.0 && t <= 1.0))
            throw std::invalid_argument("CouplerSetting: t must lie in [0, 1]");
        if (!(a > 0.0 && a <= 1.0))
            throw std::invalid_argument("CouplerSetting: a must lie in (0, 1]");
    }
};

// Thermal tuning: the coupler MZI phase grows quadratically with voltage,
// t(V) = |cos((phi0 + k V^2) / 2)|.
struct CouplerCalibration {
    double phi0_rad = 0.0;
    double rad_per_volt2 = 0.05;
    double round_trip_a = 0.978;

    CouplerSetting at_voltage(double volts) const {
        const double phi = phi0_rad + rad_per_volt2 * volts * volts;
        return CouplerSetting(std::abs(std::cos(0.5 * phi)), round_trip_a);
    }
};

inline double transmission(const CouplerSetting& c, double roundtrip_phase_rad) {
    const double t = c.self_coupling_t, a = c.round_trip_a;
    const double cosphi = std::cos(roundtrip_phase_rad);
    const double num = a * a - 2.0 * t * a * cosphi + t * t;
    const double den = 1.0 - 2.0 * t * a * cosphi + t * a * t * a;
    return num / den;
}

// Transmission at an absolute frequency for a resonance at center_hz with
// free spectral range fsr_hz: phi = 2pi (nu - center) / fsr.
inline double transmission_vs_frequency(const CouplerSetting& c, double nu_hz,
                                        double center_hz, double fsr_hz) {
    return transmission(c, kTwoPi * (nu_hz - center_hz) / fsr_hz);
}

enum class CouplingRegime { over, critical, under };

inline const char* to_string(CouplingRegime r) {
    switch (r) {
        case CouplingRegime::over: return "over";
        case CouplingRegime::critical: return "critical";
        default: return "under";
    }
}

struct LineshapeFit {
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    double q_factor = 0.0;
    double extinction_ratio_db = 0.0;
    CouplingRegime regime = CouplingRegime::over;
    double self_coupling_t = 0.0;
    double round_trip_a = 1.0;
    double residual_rms = 0.0;
};

struct FitOptions {
    double fsr_hz = 0.0;                  // required; not recoverable from one dip
    std::optional<double> a_prior;        // disambiguates the t/a assignment
    double critical_tolerance = 1e-3;     // |t - a| below this is labeled critical
    double extinction_cap_db = 60.0;
    int max_iterations = 200;
};

namespace detail {

// Width of the transmission dip at half depth between T(0) and the T(pi)
// baseline, in round-trip phase. Solved by bisection; the dip is monotonic
// on (0, pi).
inline double dip_fwhm_phase(const CouplerSetting& c) {
    const double t_min = transmission(c, 0.0);
    const double t_base = transmission(c, kPi);
    const double half = 0.5 * (t_min + t_base);
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (transmission(c, mid) < half ? lo : hi) = mid;
    }
    return lo + hi;  // two half-widths
}

struct RingModel {
    double t, a, center_hz;
};

inline double ring_model_eval(const RingModel& m, double nu_hz, double fsr_hz) {
    return transmission_vs_frequency(CouplerSetting(m.t, m.a), nu_hz, m.center_hz, fsr_hz);
}

inline double ring_residual_ss(const RingModel& m, std::span<const double> nu,
                               std::span<const double> tr, double fsr_hz) {
    double ss = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        const double r = tr[k] - ring_model_eval(m, nu[k], fsr_hz);
        ss += r * r;
    }
    return ss;
}

}  // namespace detail

// Least-squares fit of the all-pass model to a sampled transmission spectrum.
// Initial parameters come from the dip position, depth, and width; refinement
// is Levenberg-Marquardt with a numeric Jacobian in (t, a, center).
inline LineshapeFit fit_lineshape(std::span<const double> frequency_hz,
                                  std::span<const double> transmission_values,
                                  const FitOptions& opt) {
    if (frequency_hz.size() != transmission_values.size())
        throw std::invalid_argument("fit_lineshape: size mismatch");
    if (frequency_hz.size() < 10)
        throw std::invalid_argument("fit_lineshape: need at least 10 samples");
    if (!(opt.fsr_hz > 0.0))
        throw std::invalid_argument("fit_lineshape: free spectral range required");

    const std::size_t n = frequency_hz.size();
    double t_max = -std::numeric_limits<double>::infinity();
    double t_min = std::numeric_limits<double>::infinity();
    std::size_t k_min = 0;
    for (std::size_t k = 0; k < n; ++k) {
        t_max = std::max(t_max, transmission_values[k]);
        if (transmission_values[k] < t_min) {
            t_min = transmission_values[k];
            k_min = k;
        }
    }
    if (t_min > 0.9 * t_max) throw std::invalid_argument("fit_lineshape: no resonance dip found");

    // Sample-based width estimate at half depth.
    const double half_level = 0.5 * (t_min + t_max);
    double nu_lo = frequency_hz[k_min], nu_hi = frequency_hz[k_min];
    for (std::size_t k = k_min; k-- > 0;) {
        if (transmission_values[k] >= half_level) { nu_lo = frequency_hz[k]; break; }
    }
    for (std::size_t k = k_min + 1; k < n; ++k) {
        if (transmission_values[k] >= half_level) { nu_hi = frequency_hz[k]; break; }
    }
    double width_hz = std::abs(nu_hi - nu_lo);
    if (width_hz <= 0.0) width_hz = opt.fsr_hz / 100.0;

    // Invert finesse and dip depth for starting (t, a):
    // finesse = pi sqrt(ta) / (1 - ta)  ->  ta = 1 + 2x^2 - 2x sqrt(x^2 + 1),
    // with x = pi / (2 finesse).
    const double x = kPi * width_hz / (2.0 * opt.fsr_hz);
    double p = 1.0 + 2.0 * x * x - 2.0 * x * std::sqrt(x * x + 1.0);
    p = std::clamp(p, 1e-6, 1.0 - 1e-12);
    const double depth = std::sqrt(std::max(t_min / std::max(t_max, 1e-300), 0.0));
    const double d = depth * (1.0 - p);                    // |a - t|
    const double sum = std::sqrt(std::min(d * d + 4.0 * p, 4.0));
    double root_hi = 0.5 * (sum + d), root_lo = 0.5 * (sum - d);
    root_hi = std::clamp(root_hi, 1e-6, 1.0);
    root_lo = std::clamp(root_lo, 1e-6, 1.0);

    detail::RingModel m;
    m.center_hz = frequency_hz[k_min];
    if (opt.a_prior) {
        // Assign the root closer to the prior to a.
        if (std::abs(root_hi - *opt.a_prior) <= std::abs(root_lo - *opt.a_prior)) {
            m.a = root_hi; m.t = root_lo;
        } else {
            m.a = root_lo; m.t = root_hi;
        }
    } else {
        m.a = root_hi; m.t = root_lo;  // over-coupled by default
    }

    // Levenberg-Marquardt.
    double lambda = 1e-3;
    double ss = detail::ring_residual_ss(m, frequency_hz, transmission_values, opt.fsr_hz);
    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
        // Numeric Jacobian, 3 parameters.
        const double steps[3] = {1e-7, 1e-7, 1e-9 * opt.fsr_hz};
        double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double jtr[3] = {0, 0, 0};
        for (std::size_t k = 0; k < n; ++k) {
            const double f0 = detail::ring_model_eval(m, frequency_hz[k], opt.fsr_hz);
            double jac[3];
            for (int pidx = 0; pidx < 3; ++pidx) {
                detail::RingModel mp = m;
                (pidx == 0 ? mp.t : pidx == 1 ? mp.a : mp.center_hz) += steps[pidx];
                mp.t = std::clamp(mp.t, 0.0, 1.0);
                mp.a = std::clamp(mp.a, 1e-9, 1.0);
                jac[pidx] = (detail::ring_model_eval(mp, frequency_hz[k], opt.fsr_hz) - f0) /
                            steps[pidx];
            }
            const double r = transmission_values[k] - f0;
            for (int rr = 0; rr < 3; ++rr) {
                jtr[rr] += jac[rr] * r;
                for (int cc = 0; cc < 3; ++cc) jtj[rr][cc] += jac[rr] * jac[cc];
            }
        }

        bool step_taken = false;
        for (int attempt = 0; attempt < 12 && !step_taken; ++attempt) {
            double a_mat[3][3];
            for (int rr = 0; rr < 3; ++rr)
                for (int cc = 0; cc < 3; ++cc)
                    a_mat[rr][cc] = jtj[rr][cc] + (rr == cc ? lambda * jtj[rr][cc] + 1e-30 : 0.0);
            // Solve a_mat * delta = jtr (Cramer; 3x3).
            auto det3 = [](const double mm[3][3]) {
                return mm[0][0] * (mm[1][1] * mm[2][2] - mm[1][2] * mm[2][1]) -
                       mm[0][1] * (mm[1][0] * mm[2][2] - mm[1][2] * mm[2][0]) +
                       mm[0][2] * (mm[1][0] * mm[2][1] - mm[1][1] * mm[2][0]);
            };
            const double det = det3(a_mat);
            if (det == 0.0) { lambda *= 10.0; continue; }
            double delta[3];
            for (int col = 0; col < 3; ++col) {
                double tmp[3][3];
                for (int rr = 0; rr < 3; ++rr)
                    for (int cc = 0; cc < 3; ++cc) tmp[rr][cc] = a_mat[rr][cc];
                for (int rr = 0; rr < 3; ++rr) tmp[rr][col] = jtr[rr];
                delta[col] = det3(tmp) / det;
            }
            detail::RingModel trial = m;
            trial.t = std::clamp(m.t + delta[0], 0.0, 1.0);
            trial.a = std::clamp(m.a + delta[1], 1e-9, 1.0);
            trial.center_hz = m.center_hz + delta[2];
            const double trial_ss =
                detail::ring_residual_ss(trial, frequency_hz, transmission_values, opt.fsr_hz);
            if (trial_ss < ss) {
                const double rel_impr = (ss - trial_ss) / std::max(ss, 1e-300);
                m = trial;
                ss = trial_ss;
                lambda = std::max(lambda * 0.3, 1e-12);
                step_taken = true;
                if (rel_impr < 1e-12) converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!step_taken) { converged = true; break; }
        if (converged) break;
    }
    if (!converged && ss / n > 1e-6) {
        std::ostringstream msg;
        msg << "fit_lineshape: no convergence (residual rms "
            << std::sqrt(ss / static_cast<double>(n)) << ")";
        throw std::runtime_error(msg.str());
    }

    LineshapeFit fit;
    fit.self_coupling_t = m.t;
    fit.round_trip_a = m.a;
    fit.center_hz = m.center_hz;
    fit.fwhm_hz = detail::dip_fwhm_phase(CouplerSetting(m.t, m.a)) * opt.fsr_hz / kTwoPi;
    fit.q_factor = fit.center_hz / fit.fwhm_hz;
    const double t_on = transmission(CouplerSetting(m.t, m.a), 0.0);
    const double t_off = transmission(CouplerSetting(m.t, m.a), kPi);
    const double floor_ratio = std::pow(10.0, -opt.extinction_cap_db / 10.0);
    fit.extinction_ratio_db =
        10.0 * std::log10(t_off / std::max(t_on, t_off * floor_ratio));
    fit.extinction_ratio_db = std::min(fit.extinction_ratio_db, opt.extinction_cap_db);
    if (std::abs(m.t - m.a) < opt.critical_tolerance)
        fit.regime = CouplingRegime::critical;
    else
        fit.regime = m.t < m.a ? CouplingRegime::over : CouplingRegime::under;
    fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

// Synthesizes a dense spectrum for each coupler setting and fits it back,
// producing the coupling-sweep table (Q, FWHM, extinction ratio, regime).
inline std::vector<LineshapeFit> regime_sweep(std::span<const CouplerSetting> settings,
                                              double center_hz, double fsr_hz,
                                              int samples_per_spectrum = 4001) {
    std::vector<LineshapeFit> table;
    table.reserve(settings.size());
    for (const auto& setting : settings) {
        std::vector<double> nu(samples_per_spectrum), tr(samples_per_spectrum);
        for (int k = 0; k < samples_per_spectrum; ++k) {
            nu[k] = center_hz + fsr_hz * (static_cast<double>(k) / (samples_per_spectrum - 1) - 0.5);
            tr[k] = transmission_vs_frequency(setting, nu[k], center_hz, fsr_hz);
        }
        FitOptions opt;
        opt.fsr_hz = fsr_hz;
        opt.a_prior = setting.round_trip_a;
        table.push_back(fit_lineshape(nu, tr, opt));
    }
    return table;
}

}  // namespace biphoton

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "biphoton/ring.hpp"
#include "biphoton/units.hpp"

using namespace biphoton;

namespace {

constexpr double kFsr = 197.6e9;
constexpr double kCenter = 193.88e12;

std::pair<std::vector<double>, std::vector<double>> synthetic_spectrum(
    const CouplerSetting& c, int n = 4001, double span = kFsr) {
    std::vector<double> nu(n), tr(n);
    for (int k = 0; k < n; ++k) {
        nu[k] = kCenter + span * (static_cast<double>(k) / (n - 1) - 0.5);
        tr[k] = transmission_vs_frequency(c, nu[k], kCenter, kFsr);
    }
    return {nu, tr};
}

}  // namespace

TEST_CASE("transmission: critical coupling nulls the carrier") {
    const CouplerSetting c(0.95, 0.95);
    CHECK(transmission(c, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("transmission: decoupled and lossless limits are unity") {
    for (double phi : {0.0, 0.3, 2.0}) {
        CHECK(transmission(CouplerSetting(1.0, 0.9), phi) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(transmission(CouplerSetting(0.7, 1.0), phi) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("transmission: bounded in [0, 1] for all settings") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> ut(0.0, 1.0), ua(0.01, 1.0), uphi(-kPi, kPi);
    for (int k = 0; k < 500; ++k) {
        const CouplerSetting c(ut(gen), ua(gen));
        const double t = transmission(c, uphi(gen));
        CHECK(t >= -1e-15);
        CHECK(t <= 1.0 + 1e-15);
    }
}

TEST_CASE("transmission: on-resonance value ((a-t)/(1-ta))^2") {
    const CouplerSetting c(0.9, 0.97);
    const double expected = std::pow((0.97 - 0.9) / (1.0 - 0.9 * 0.97), 2);
    CHECK(transmission(c, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("CouplerSetting: range validation") {
    CHECK_THROWS_AS(CouplerSetting(1.2, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(CouplerSetting(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("fit_lineshape: round-trips synthetic spectra within 1%") {
    for (double t : {0.5, 0.75, 0.9087, 0.97})
        for (double a : {0.92, 0.978, 0.995}) {
            if (std::abs(t - a) < 5e-3) continue;  // critical handled separately
            const CouplerSetting truth(t, a);
            const auto [nu, tr] = synthetic_spectrum(truth);
            // Combinations whose dip is shallower than the no-dip threshold
            // (min > 0.9 max) are rejected by contract, not fitted.
            const double t_min = transmission(truth, 0.0);
            const double t_max = transmission(truth, kPi);
            FitOptions opt;
            opt.fsr_hz = kFsr;
            opt.a_prior = a;
            if (t_min > 0.9 * t_max) {
                CHECK_THROWS_AS(fit_lineshape(nu, tr, opt), std::invalid_argument);
                continue;
            }
            const auto fit = fit_lineshape(nu, tr, opt);
            CHECK(fit.self_coupling_t == doctest::Approx(t).epsilon(0.01));
            CHECK(fit.round_trip_a == doctest::Approx(a).epsilon(0.01));
            CHECK(fit.center_hz == doctest::Approx(kCenter).epsilon(1e-9));
            // FWHM/Q against the model's own dip width.
            const double expected_fwhm = detail::dip_fwhm_phase(truth) * kFsr / kTwoPi;
            CHECK(fit.fwhm_hz == doctest::Approx(expected_fwhm).epsilon(0.01));
            CHECK(fit.q_factor == doctest::Approx(kCenter / expected_fwhm).epsilon(0.01));
        }
}

TEST_CASE("fit_lineshape: device linewidth maps to Q of 2.61e4") {
    // 7.44 GHz FWHM at 1546.23 nm: pick (t, a) that reproduce the linewidth
    // at escape efficiency 0.8, then fit the synthetic spectrum.
    const double center = wavelength_nm_to_hz(1546.23);
    const CouplerSetting truth(0.90874, 0.97800);
    std::vector<double> nu(4001), tr(4001);
    for (int k = 0; k < 4001; ++k) {
        nu[k] = center + kFsr * (k / 4000.0 - 0.5);
        tr[k] = transmission_vs_frequency(truth, nu[k], center, kFsr);
    }
    FitOptions opt;
    opt.fsr_hz = kFsr;
    opt.a_prior = truth.round_trip_a;
    const auto fit = fit_lineshape(nu, tr, opt);
    CHECK(fit.fwhm_hz == doctest::Approx(7.44e9).epsilon(0.02));
    CHECK(fit.q_factor == doctest::Approx(2.61e4).epsilon(0.02));
    CHECK(fit.regime == CouplingRegime::over);
}

TEST_CASE("fit_lineshape: critical dip reports the capped extinction ratio") {
    const CouplerSetting truth(0.96, 0.96);
    const auto [nu, tr] = synthetic_spectrum(truth);
    FitOptions opt;
    opt.fsr_hz = kFsr;
    opt.a_prior = 0.96;
    const auto fit = fit_lineshape(nu, tr, opt);
    CHECK(fit.regime == CouplingRegime::critical);
    CHECK(fit.extinction_ratio_db == doctest::Approx(opt.extinction_cap_db));
}

TEST_CASE("fit_lineshape: error paths") {
    FitOptions opt;
    opt.fsr_hz = kFsr;
    std::vector<double> nu = {1.0, 2.0, 3.0};
    std::vector<double> tr = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(fit_lineshape(nu, tr, opt), std::invalid_argument);  // too few samples
    // Flat spectrum: no dip.
    std::vector<double> nu2(64), tr2(64, 0.99);
    for (int k = 0; k < 64; ++k) nu2[k] = kCenter + k * 1e9;
    CHECK_THROWS_WITH_AS(fit_lineshape(nu2, tr2, opt), doctest::Contains("no resonance dip"),
                         std::invalid_argument);
    // Missing FSR.
    FitOptions opt2;
    const auto [nu3, tr3] = synthetic_spectrum(CouplerSetting(0.9, 0.978));
    CHECK_THROWS_AS(fit_lineshape(nu3, tr3, opt2), std::invalid_argument);
}

TEST_CASE("regime_sweep: extinction peaks at critical coupling, FWHM shrinks with t") {
    const double a = 0.978;
    std::vector<CouplerSetting> settings;
    for (int k = 0; k <= 20; ++k) settings.emplace_back(0.9 + 0.0975 * k / 20.0, a);
    const auto table = regime_sweep(settings, kCenter, kFsr);
    REQUIRE(table.size() == settings.size());

    // Extinction maximal at the setting closest to critical coupling.
    std::size_t er_peak = 0;
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table[k].extinction_ratio_db > table[er_peak].extinction_ratio_db) er_peak = k;
    std::size_t closest = 0;
    for (std::size_t k = 0; k < settings.size(); ++k)
        if (std::abs(settings[k].self_coupling_t - a) <
            std::abs(settings[closest].self_coupling_t - a))
            closest = k;
    CHECK(er_peak == closest);

    // FWHM monotonically decreasing along the t sweep.
    for (std::size_t k = 1; k < table.size(); ++k)
        CHECK(table[k].fwhm_hz < table[k - 1].fwhm_hz);

    // Regime labels change over -> critical -> under exactly once.
    int transitions = 0;
    for (std::size_t k = 1; k < table.size(); ++k)
        if (table[k].regime != table[k - 1].regime) ++transitions;
    CHECK(transitions <= 2);
    CHECK(table.front().regime == CouplingRegime::over);
    CHECK(table.back().regime == CouplingRegime::under);
}

TEST_CASE("CouplerCalibration: voltage sweep crosses critical coupling") {
    CouplerCalibration cal;
    cal.phi0_rad = 0.0;
    cal.rad_per_volt2 = 0.05;
    cal.round_trip_a = 0.978;
    // t decreases from 1 as voltage rises; somewhere it crosses a.
    const auto low = cal.at_voltage(0.0);
    CHECK(low.self_coupling_t == doctest::Approx(1.0));
    bool crossed = false;
    double prev = low.self_coupling_t;
    for (double v = 0.0; v <= 6.0; v += 0.1) {
        const double t = cal.at_voltage(v).self_coupling_t;
        if (prev >= cal.round_trip_a && t < cal.round_trip_a) crossed = true;
        prev = t;
    }
    CHECK(crossed);
}

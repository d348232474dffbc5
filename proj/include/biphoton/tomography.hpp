#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "biphoton/grid.hpp"
#include "biphoton/interferometry.hpp"
#include "biphoton/spectral.hpp"
#include "biphoton/units.hpp"

// Four-interferogram phase reconstruction. A run holds the quartet recorded
// at the canonical phase settings of its mode; the joint spectral phase
// follows per pixel from
//   theta_jsa = atan2(P(3pi/4) - P(pi/4), P(0) - P(pi/2))
// for the spontaneous quartet, and from the doubled settings in the same
// positions for the seeded quartet.

namespace biphoton {

enum class TomographyMode { spontaneous, stimulated };

inline std::array<double, 4> canonical_thetas(TomographyMode mode) {
    if (mode == TomographyMode::spontaneous)
        return {0.0, kPi / 4.0, kPi / 2.0, 3.0 * kPi / 4.0};
    return {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};
}

struct TomographySettings {
    TomographyMode mode = TomographyMode::spontaneous;
    double eta = 0.5;
    double brightness_ratio = 1.0;
};

struct TomographyRun {
    TomographySettings settings;
    std::array<Interferogram, 4> frames;  // ordered as canonical_thetas(mode)

    void validate() const {
        const auto thetas = canonical_thetas(settings.mode);
        for (int k = 0; k < 4; ++k) {
            if (std::abs(frames[k].theta_rad - thetas[k]) > 1e-9)
                throw std::invalid_argument(
                    "TomographyRun: frame phase settings do not match the canonical set");
            if (!(frames[k].map.grid == frames[0].map.grid))
                throw std::invalid_argument("TomographyRun: frames on different grids");
        }
    }
};

inline TomographyRun synthesize_run(const ComplexField2D& phi_ring,
                                    const ComplexField2D& phi_wg, double eta,
                                    TomographyMode mode, double brightness_ratio = 1.0) {
    TomographyRun run;
    run.settings = {mode, eta, brightness_ratio};
    const auto w = weights_from_eta(eta, brightness_ratio);
    const auto thetas = canonical_thetas(mode);
    for (int k = 0; k < 4; ++k) {
        const SplitterSetting s(eta, thetas[k]);
        run.frames[k] = mode == TomographyMode::spontaneous
                            ? coincidence_probability(phi_ring, phi_wg, s, w)
                            : set_interference(phi_ring, phi_wg, s, w);
    }
    return run;
}

// Extracts the wrapped phase map. Pixels where both quartet differences fall
// below floor times the global frame maximum are masked out rather than
// reported; there the arctangent runs on noise.
inline JspMap extract_jsp(const TomographyRun& run, double floor = 1e-4) {
    run.validate();
    const auto& g = run.frames[0].map.grid;
    JspMap out(g, run.settings.mode == TomographyMode::spontaneous
                      ? JspProvenance::spontaneous
                      : JspProvenance::stimulated);

    double frame_max = 0.0;
    for (const auto& f : run.frames)
        for (double v : f.map.values) frame_max = std::max(frame_max, v);
    const double cut = floor * frame_max;

    const auto& p0 = run.frames[0].map.values;
    const auto& p1 = run.frames[1].map.values;
    const auto& p2 = run.frames[2].map.values;
    const auto& p3 = run.frames[3].map.values;
    for (std::size_t k = 0; k < out.phase_rad.size(); ++k) {
        const double num = p3[k] - p1[k];
        const double den = p0[k] - p2[k];
        if (std::abs(num) < cut && std::abs(den) < cut) continue;
        double a = std::atan2(num, den);
        if (a <= -kPi) a += kTwoPi;
        out.phase_rad[k] = a;
        out.valid[k] = 1;
    }
    return out;
}

struct ContourMetrics {
    double level = 0.0;
    std::size_t pixel_count = 0;
    double rms_rad = 0.0;
    double max_abs_rad = 0.0;
    double circular_correlation = 0.0;
};

struct JspComparison {
    std::vector<ContourMetrics> per_level;
    double circular_mean_offset_rad = 0.0;  // circular mean of wrap(a - b), always reported
    bool mean_subtracted = false;
};

namespace detail {

// Fisher-Lee circular correlation coefficient.
inline double circular_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty()) return 0.0;
    double sa = 0.0, ca = 0.0, sb = 0.0, cb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sa += std::sin(a[k]); ca += std::cos(a[k]);
        sb += std::sin(b[k]); cb += std::cos(b[k]);
    }
    const double mean_a = std::atan2(sa, ca);
    const double mean_b = std::atan2(sb, cb);
    double num = 0.0, da2 = 0.0, db2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double da = std::sin(a[k] - mean_a);
        const double db = std::sin(b[k] - mean_b);
        num += da * db;
        da2 += da * da;
        db2 += db * db;
    }
    const double denom = std::sqrt(da2 * db2);
    return denom > 0.0 ? num / denom : 0.0;
}

}  // namespace detail

// Wrapped-difference statistics between two phase maps inside each contour
// region, restricted to pixels valid in both maps.
inline JspComparison compare_jsp(const JspMap& a, const JspMap& b,
                                 const std::vector<ContourMask>& masks,
                                 bool subtract_circular_mean = false) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("compare_jsp: grid mismatch");
    const std::size_t n = a.phase_rad.size();
    for (const auto& m : masks)
        if (m.inside.size() != n)
            throw std::invalid_argument("compare_jsp: mask size mismatch");

    std::vector<double> diff(n, 0.0);
    std::vector<std::uint8_t> ok(n, 0);
    double ms = 0.0, mc = 0.0;
    std::size_t n_ok = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!a.valid[k] || !b.valid[k]) continue;
        ok[k] = 1;
        ++n_ok;
        diff[k] = wrap_phase(a.phase_rad[k] - b.phase_rad[k]);
        ms += std::sin(diff[k]);
        mc += std::cos(diff[k]);
    }
    if (n_ok == 0) throw std::invalid_argument("compare_jsp: no overlapping valid region");

    JspComparison report;
    report.circular_mean_offset_rad = std::atan2(ms, mc);
    report.mean_subtracted = subtract_circular_mean;
    if (subtract_circular_mean)
        for (std::size_t k = 0; k < n; ++k)
            if (ok[k]) diff[k] = wrap_phase(diff[k] - report.circular_mean_offset_rad);

    for (const auto& m : masks) {
        ContourMetrics metrics;
        metrics.level = m.level;
        std::vector<double> pa, pb;
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (!ok[k] || !m.inside[k]) continue;
            ++metrics.pixel_count;
            ss += diff[k] * diff[k];
            metrics.max_abs_rad = std::max(metrics.max_abs_rad, std::abs(diff[k]));
            pa.push_back(a.phase_rad[k]);
            pb.push_back(b.phase_rad[k]);
        }
        if (metrics.pixel_count == 0)
            throw std::invalid_argument("compare_jsp: no overlapping valid region at level");
        metrics.rms_rad = std::sqrt(ss / static_cast<double>(metrics.pixel_count));
        metrics.circular_correlation = detail::circular_correlation(pa, pb);
        report.per_level.push_back(metrics);
    }
    return report;
}

}  // namespace biphoton

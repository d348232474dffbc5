#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "biphoton/grid.hpp"
#include "biphoton/units.hpp"

namespace biphoton {

// Riemann-sum L2 norm squared: sum |v|^2 * dnu_s * dnu_i.
inline double field_norm_squared(const ComplexField2D& field) {
    double acc = 0.0;
    for (const auto& v : field.values) acc += std::norm(v);
    return acc * field.grid.cell_area_hz2();
}

// Rescales so that sum |v|^2 * dnu_s * dnu_i = 1. Pure magnitude scaling;
// the phase of every point is untouched.
inline ComplexField2D normalize(const ComplexField2D& field) {
    const double n2 = field_norm_squared(field);
    if (n2 <= 0.0) throw std::domain_error("normalize: degenerate field (all zero)");
    const double scale = 1.0 / std::sqrt(n2);
    ComplexField2D out = field;
    for (auto& v : out.values) v *= scale;
    return out;
}

inline RealField2D jsi(const ComplexField2D& field) {
    RealField2D out(field.grid);
    for (std::size_t k = 0; k < field.values.size(); ++k)
        out.values[k] = std::norm(field.values[k]);
    return out;
}

// Principal argument per pixel. Pixels whose intensity falls below
// floor * max intensity are masked invalid; their phase is set to 0.
inline JspMap jsp(const ComplexField2D& field, double floor = 0.01,
                  JspProvenance provenance = JspProvenance::reference) {
    if (floor < 0.0) throw std::invalid_argument("jsp: floor must be >= 0");
    JspMap out(field.grid, provenance);
    double max_intensity = 0.0;
    for (const auto& v : field.values) max_intensity = std::max(max_intensity, std::norm(v));
    const double cut = floor * max_intensity;
    for (std::size_t k = 0; k < field.values.size(); ++k) {
        const double intensity = std::norm(field.values[k]);
        if (intensity >= cut && intensity > 0.0) {
            double a = std::arg(field.values[k]);
            if (a <= -kPi) a += kTwoPi;  // map -pi onto +pi
            out.phase_rad[k] = a;
            out.valid[k] = 1;
        }
    }
    return out;
}

// One mask per requested fraction of the maximum. Masks for higher levels are
// subsets of masks for lower levels.
inline std::vector<ContourMask> contour_mask(const RealField2D& intensity,
                                             const std::vector<double>& levels) {
    if (levels.empty()) throw std::invalid_argument("contour_mask: empty levels list");
    for (double lv : levels)
        if (!(lv > 0.0 && lv < 1.0))
            throw std::invalid_argument("contour_mask: levels must lie in (0, 1)");
    const double max_v = *std::max_element(intensity.values.begin(), intensity.values.end());
    if (!(max_v > 0.0))
        throw std::invalid_argument("contour_mask: intensity maximum must be positive");

    std::vector<ContourMask> masks;
    masks.reserve(levels.size());
    for (double lv : levels) {
        ContourMask m;
        m.level = lv;
        m.inside.resize(intensity.values.size(), 0);
        const double threshold = lv * max_v;
        for (std::size_t k = 0; k < intensity.values.size(); ++k)
            m.inside[k] = intensity.values[k] >= threshold ? 1 : 0;
        masks.push_back(std::move(m));
    }
    return masks;
}

}  // namespace biphoton

#pragma once

#include <cmath>
#include <stdexcept>

#include "biphoton/grid.hpp"
#include "biphoton/interferometry.hpp"
#include "biphoton/sources.hpp"

// Phantom-channel decomposition of a lossy ring JSA. Scattered photons are
// routed to a fictitious channel; the joint amplitude splits into four
// components keyed by where each photon ends up (r = real waveguide,
// l = lost). Coincidence detection only ever sees the rr component.

namespace biphoton {

struct LossyJsa {
    ComplexField2D rr, rl, lr, ll;
    double escape_signal = 1.0;
    double escape_idler = 1.0;
};

// Splits a unit-norm lossless JSA by per-photon escape efficiency. The rr
// component is the lossless amplitude scaled by sqrt(escape_s * escape_i);
// lost components carry the remaining norm with the same lineshape (their
// shape never affects coincidences).
inline LossyJsa split_jsa_phantom(const ComplexField2D& lossless, double escape_signal,
                                  double escape_idler) {
    for (double e : {escape_signal, escape_idler})
        if (!(e > 0.0 && e <= 1.0))
            throw std::domain_error("split_jsa_phantom: unphysical escape efficiency");
    LossyJsa out;
    out.escape_signal = escape_signal;
    out.escape_idler = escape_idler;
    const double s = escape_signal, i = escape_idler;
    const double w_rr = std::sqrt(s * i);
    const double w_rl = std::sqrt(s * (1.0 - i));
    const double w_lr = std::sqrt((1.0 - s) * i);
    const double w_ll = std::sqrt((1.0 - s) * (1.0 - i));
    out.rr = lossless;
    out.rl = lossless;
    out.lr = lossless;
    out.ll = lossless;
    for (std::size_t k = 0; k < lossless.values.size(); ++k) {
        out.rr.values[k] *= w_rr;
        out.rl.values[k] *= w_rl;
        out.lr.values[k] *= w_lr;
        out.ll.values[k] *= w_ll;
    }
    return out;
}

// Escape efficiencies taken from the ring coupling parameters,
// |gamma_k|^2 / (2 Gamma_k).
inline LossyJsa split_jsa_phantom(const ComplexField2D& lossless, const RingParams& r) {
    return split_jsa_phantom(lossless, r.escape_signal(), r.escape_idler());
}

// Interferogram of the lossy source: only the rr component interferes with
// the (lossless) waveguide reference; broken pairs never produce coincidences.
inline Interferogram lossy_coincidence(const LossyJsa& lossy, const ComplexField2D& phi_wg,
                                       const SplitterSetting& s, const SourceAmplitudes& w) {
    return coincidence_probability(lossy.rr, phi_wg, s, w);
}

struct LossComponentNorms {
    double rr = 0.0, rl = 0.0, lr = 0.0, ll = 0.0;
    double total() const { return rr + rl + lr + ll; }
};

inline LossComponentNorms component_norms(const LossyJsa& lossy) {
    return {field_norm_squared(lossy.rr), field_norm_squared(lossy.rl),
            field_norm_squared(lossy.lr), field_norm_squared(lossy.ll)};
}

}  // namespace biphoton

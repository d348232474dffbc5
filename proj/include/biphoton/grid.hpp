#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace biphoton {

// Uniform rectangular signal x idler frequency grid. Detunings are measured
// from the stored center frequencies; point i sits at -span/2 + i*span/(n-1),
// so the axes are fully reproducible from the five scalars per axis.
struct FrequencyGrid {
    double center_signal_hz = 0.0;
    double center_idler_hz = 0.0;
    double span_signal_hz = 0.0;
    double span_idler_hz = 0.0;
    int n_signal = 0;
    int n_idler = 0;

    FrequencyGrid() = default;
    FrequencyGrid(double center_s, double center_i, double span_s, double span_i,
                  int n_s, int n_i)
        : center_signal_hz(center_s),
          center_idler_hz(center_i),
          span_signal_hz(span_s),
          span_idler_hz(span_i),
          n_signal(n_s),
          n_idler(n_i) {
        if (n_signal < 2 || n_idler < 2)
            throw std::invalid_argument("FrequencyGrid: point counts must be >= 2");
        if (!(span_signal_hz > 0.0) || !(span_idler_hz > 0.0))
            throw std::invalid_argument("FrequencyGrid: spans must be positive");
    }

    double signal_step_hz() const { return span_signal_hz / (n_signal - 1); }
    double idler_step_hz() const { return span_idler_hz / (n_idler - 1); }

    double signal_detuning_hz(int i) const {
        return -0.5 * span_signal_hz + i * signal_step_hz();
    }
    double idler_detuning_hz(int j) const {
        return -0.5 * span_idler_hz + j * idler_step_hz();
    }

    double signal_hz(int i) const { return center_signal_hz + signal_detuning_hz(i); }
    double idler_hz(int j) const { return center_idler_hz + idler_detuning_hz(j); }

    std::size_t size() const {
        return static_cast<std::size_t>(n_signal) * static_cast<std::size_t>(n_idler);
    }

    // Storage is row-major with the signal index fastest.
    std::size_t index(int i_signal, int i_idler) const {
        return static_cast<std::size_t>(i_idler) * n_signal + i_signal;
    }

    double cell_area_hz2() const { return signal_step_hz() * idler_step_hz(); }

    bool operator==(const FrequencyGrid&) const = default;
};

struct ComplexField2D {
    FrequencyGrid grid;
    std::vector<std::complex<double>> values;

    ComplexField2D() = default;
    explicit ComplexField2D(const FrequencyGrid& g)
        : grid(g), values(g.size(), std::complex<double>(0.0, 0.0)) {}
    ComplexField2D(const FrequencyGrid& g, std::vector<std::complex<double>> v)
        : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("ComplexField2D: value count does not match grid");
    }

    std::complex<double>& at(int i_signal, int i_idler) {
        return values[grid.index(i_signal, i_idler)];
    }
    const std::complex<double>& at(int i_signal, int i_idler) const {
        return values[grid.index(i_signal, i_idler)];
    }
};

struct RealField2D {
    FrequencyGrid grid;
    std::vector<double> values;

    RealField2D() = default;
    explicit RealField2D(const FrequencyGrid& g) : grid(g), values(g.size(), 0.0) {}
    RealField2D(const FrequencyGrid& g, std::vector<double> v)
        : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("RealField2D: value count does not match grid");
    }

    double& at(int i_signal, int i_idler) { return values[grid.index(i_signal, i_idler)]; }
    const double& at(int i_signal, int i_idler) const {
        return values[grid.index(i_signal, i_idler)];
    }
};

// Coincidence (or stimulated-intensity) map tagged with the interferometer
// setting it was recorded at. Values are non-negative.
struct Interferogram {
    RealField2D map;
    double theta_rad = 0.0;
    double eta = 0.0;
};

enum class JspProvenance { spontaneous, stimulated, reference };

// Wrapped phase map on the principal branch (-pi, pi] with a per-pixel
// validity mask; invalid pixels carry no meaningful phase.
struct JspMap {
    FrequencyGrid grid;
    std::vector<double> phase_rad;
    std::vector<std::uint8_t> valid;
    JspProvenance provenance = JspProvenance::reference;

    JspMap() = default;
    explicit JspMap(const FrequencyGrid& g, JspProvenance p = JspProvenance::reference)
        : grid(g), phase_rad(g.size(), 0.0), valid(g.size(), 0), provenance(p) {}

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto v : valid) n += (v != 0);
        return n;
    }
};

// Boolean region where an intensity map exceeds a fraction of its maximum.
struct ContourMask {
    double level = 0.0;
    std::vector<std::uint8_t> inside;

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : inside) n += (v != 0);
        return n;
    }
};

}  // namespace biphoton

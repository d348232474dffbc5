#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "biphoton/grid.hpp"
#include "biphoton/noise.hpp"
#include "biphoton/ring.hpp"
#include "biphoton/sources.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/units.hpp"

// Run configuration: a sectioned key = value file. Every physical quantity
// carries its unit in the key name (_nm, _ghz, _ps, _um, _mm). Unknown
// sections or keys are rejected with the offending line number. All keys are
// optional; defaults describe the reference device.

namespace biphoton {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;
};

struct ParsedConfig {
    std::string source_name;
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline ParsedConfig parse_config_text(const std::string& text, const std::string& name) {
    ParsedConfig out;
    out.source_name = name;
    std::istringstream stream(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(name + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(line_no) + ": empty section name");
            out.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(line_no) + ": expected 'key = value'");
        if (section.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key or value");
        out.sections[section][key] = {value, line_no};
    }
    return out;
}

// Tracks which keys a section reader consumed so leftovers can be reported.
class SectionReader {
public:
    SectionReader(const ParsedConfig& cfg, const std::string& section)
        : cfg_(cfg), section_(section) {
        const auto it = cfg.sections.find(section);
        entries_ = it == cfg.sections.end() ? nullptr : &it->second;
    }

    double number(const std::string& key, double fallback) {
        const ConfigEntry* e = find(key);
        if (!e) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(e->value, &pos);
            if (pos != e->value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(cfg_.source_name + ":" + std::to_string(e->line) +
                              ": value of '" + key + "' is not a number: '" + e->value + "'");
        }
    }

    long long integer(const std::string& key, long long fallback) {
        const ConfigEntry* e = find(key);
        if (!e) return fallback;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(e->value, &pos);
            if (pos != e->value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(cfg_.source_name + ":" + std::to_string(e->line) +
                              ": value of '" + key + "' is not an integer: '" + e->value + "'");
        }
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const ConfigEntry* e = find(key);
        return e ? e->value : fallback;
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, entry] : *entries_)
            if (!consumed_.contains(key))
                throw ConfigError(cfg_.source_name + ":" + std::to_string(entry.line) +
                                  ": unknown key '" + key + "' in section [" + section_ + "]");
    }

private:
    const ConfigEntry* find(const std::string& key) {
        consumed_.insert(key);
        if (!entries_) return nullptr;
        const auto it = entries_->find(key);
        return it == entries_->end() ? nullptr : &it->second;
    }

    const ParsedConfig& cfg_;
    std::string section_;
    const std::map<std::string, ConfigEntry>* entries_ = nullptr;
    std::set<std::string> consumed_;
};

}  // namespace detail

struct SmoothingConfig {
    double sigma_px = 1.0;
    int window_px = 3;
};

struct RingSweepConfig {
    std::string mode = "sweep";       // "sweep" or "fit"
    std::string spectrum_csv;         // two-column wavelength_nm,transmission (fit mode)
    double t_start = 0.90;
    double t_stop = 0.999;
    int t_steps = 25;
    double round_trip_a = 0.978;
    double center_wavelength_nm = 1546.23;
    double fsr_ghz = 0.0;             // 0: derived from group index and ring length
};

struct RunConfig {
    RingParams ring;
    WaveguideParams waveguide;
    PumpSpectrum pump;
    FrequencyGrid grid;
    TomographyMode mode = TomographyMode::spontaneous;
    double eta = 0.5;
    double brightness_ratio = 1.0;
    NoiseConfig noise;
    FilterResponse filter_signal;
    FilterResponse filter_idler;
    SmoothingConfig smoothing;
    double escape_signal = 1.0;  // phantom-channel loss applied in the pipeline
    double escape_idler = 1.0;
    double jsp_floor = 1e-4;
    RingSweepConfig ring_sweep;
    std::string output_directory = "out";

    double ring_fsr_hz() const {
        if (ring_sweep.fsr_ghz > 0.0) return ring_sweep.fsr_ghz * 1e9;
        return kSpeedOfLight / (waveguide.group_index * ring.length_m);
    }

    // Reference device values.
    static RunConfig defaults() {
        RunConfig c;
        const double nu_pump = wavelength_nm_to_hz(1546.23);
        const double nu_signal = wavelength_nm_to_hz(1538.55);
        const double nu_idler = wavelength_nm_to_hz(1553.98);
        c.ring = RingParams::from_linewidths(nu_pump, nu_signal, nu_idler, 7.44e9, 7.44e9,
                                             7.44e9, 0.8, 363e-6);
        c.waveguide = {2.8e-3, 4.181, 2.4473, -1.1327, -0.0440, 1.55};
        c.pump = PumpSpectrum(nu_pump, 15e-12, PumpShape::gaussian, 0.0, 1.0);
        c.grid = FrequencyGrid(nu_signal, nu_idler, 25e9, 25e9, 128, 128);
        c.filter_signal = {FilterShape::lorentzian, 1.25e9};
        c.filter_idler = {FilterShape::lorentzian, 1.25e9};
        c.noise = {1e5, 1, 0.0};
        return c;
    }

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text, const std::string& name = "<config>");
};

inline RunConfig RunConfig::from_string(const std::string& text, const std::string& name) {
    const auto parsed = detail::parse_config_text(text, name);
    const std::set<std::string> known_sections = {"device", "grid", "interference",
                                                  "noise",  "loss", "ring", "output"};
    for (const auto& [section, _] : parsed.sections)
        if (!known_sections.contains(section))
            throw ConfigError(name + ": unknown section [" + section + "]");

    RunConfig c = defaults();
    auto fail = [&](const std::string& msg) { throw ConfigError(name + ": " + msg); };

    {
        detail::SectionReader dev(parsed, "device");
        const double pump_nm = dev.number("pump_wavelength_nm", 1546.23);
        const double signal_nm = dev.number("signal_wavelength_nm", 1538.55);
        const double idler_nm = dev.number("idler_wavelength_nm", 1553.98);
        const double fwhm_pump = dev.number("ring_fwhm_pump_ghz", dev.number("ring_fwhm_ghz", 7.44));
        const double fwhm_signal = dev.number("ring_fwhm_signal_ghz", dev.number("ring_fwhm_ghz", 7.44));
        const double fwhm_idler = dev.number("ring_fwhm_idler_ghz", dev.number("ring_fwhm_ghz", 7.44));
        const double escape = dev.number("escape_efficiency", 0.8);
        const double ring_len_um = dev.number("ring_length_um", 363.0);
        const double duration_ps = dev.number("pump_duration_ps", 15.0);
        const std::string shape = dev.text("pump_shape", "gaussian");
        const double chirp_ghz2 = dev.number("pump_chirp_rad_per_ghz2", 0.0);
        const double wg_len_mm = dev.number("waveguide_length_mm", 2.8);
        const double group_index = dev.number("group_index", 4.181);
        const double n1 = dev.number("dispersion_n1", 2.4473);
        const double n2 = dev.number("dispersion_n2", -1.1327);
        const double n3 = dev.number("dispersion_n3", -0.0440);
        const double lambda0 = dev.number("dispersion_lambda0_um", 1.55);
        dev.finish();

        if (shape != "gaussian" && shape != "sech2")
            fail("pump_shape must be 'gaussian' or 'sech2'");
        if (!(escape > 0.0 && escape <= 1.0))
            fail("escape_efficiency must lie in (0, 1]");
        c.ring = RingParams::from_linewidths(
            wavelength_nm_to_hz(pump_nm), wavelength_nm_to_hz(signal_nm),
            wavelength_nm_to_hz(idler_nm), fwhm_pump * 1e9, fwhm_signal * 1e9,
            fwhm_idler * 1e9, escape, ring_len_um * 1e-6);
        c.waveguide = {wg_len_mm * 1e-3, group_index, n1, n2, n3, lambda0};
        c.waveguide.validate();
        c.pump = PumpSpectrum(wavelength_nm_to_hz(pump_nm), duration_ps * 1e-12,
                              shape == "gaussian" ? PumpShape::gaussian : PumpShape::sech2,
                              chirp_ghz2 * 1e-18, 1.0);
    }
    {
        detail::SectionReader grid(parsed, "grid");
        const int n_signal = static_cast<int>(grid.integer("n_signal", 128));
        const int n_idler = static_cast<int>(grid.integer("n_idler", 128));
        const double span_s = grid.number("span_signal_ghz", 25.0);
        const double span_i = grid.number("span_idler_ghz", 25.0);
        grid.finish();
        c.grid = FrequencyGrid(c.ring.nu_signal_hz, c.ring.nu_idler_hz, span_s * 1e9,
                               span_i * 1e9, n_signal, n_idler);
    }
    {
        detail::SectionReader inter(parsed, "interference");
        c.eta = inter.number("eta", 0.5);
        c.brightness_ratio = inter.number("brightness_ratio", 1.0);
        const std::string mode = inter.text("mode", "spontaneous");
        c.jsp_floor = inter.number("jsp_floor", 1e-4);
        inter.finish();
        if (mode == "spontaneous") c.mode = TomographyMode::spontaneous;
        else if (mode == "stimulated") c.mode = TomographyMode::stimulated;
        else fail("interference mode must be 'spontaneous' or 'stimulated'");
        if (!(c.eta >= 0.0 && c.eta <= 1.0)) fail("eta must lie in [0, 1]");
        if (!(c.brightness_ratio > 0.0)) fail("brightness_ratio must be positive");
        if (!(c.jsp_floor >= 0.0)) fail("jsp_floor must be >= 0");
    }
    {
        detail::SectionReader noise(parsed, "noise");
        c.noise.pairs_per_setting = noise.number("pairs_per_setting", 1e5);
        c.noise.seed = static_cast<std::uint64_t>(noise.integer("seed", 1));
        c.noise.dark_rate_fraction = noise.number("dark_rate_fraction", 0.0);
        const std::string fshape = noise.text("filter_shape", "lorentzian");
        const double f_fwhm = noise.number("filter_fwhm_ghz", 1.25);
        c.smoothing.sigma_px = noise.number("smoothing_sigma_px", 1.0);
        c.smoothing.window_px = static_cast<int>(noise.integer("smoothing_window_px", 3));
        noise.finish();
        c.noise.validate();
        if (fshape != "lorentzian" && fshape != "gaussian")
            fail("filter_shape must be 'lorentzian' or 'gaussian'");
        const FilterShape fs = fshape == "lorentzian" ? FilterShape::lorentzian
                                                      : FilterShape::gaussian;
        c.filter_signal = {fs, f_fwhm * 1e9};
        c.filter_idler = {fs, f_fwhm * 1e9};
        c.filter_signal.validate();
        if (!(c.smoothing.sigma_px >= 0.0)) fail("smoothing_sigma_px must be >= 0");
        if (c.smoothing.window_px < 1 || c.smoothing.window_px % 2 == 0)
            fail("smoothing_window_px must be odd and >= 1");
    }
    {
        detail::SectionReader loss(parsed, "loss");
        c.escape_signal = loss.number("escape_signal", 1.0);
        c.escape_idler = loss.number("escape_idler", 1.0);
        loss.finish();
        for (double e : {c.escape_signal, c.escape_idler})
            if (!(e > 0.0 && e <= 1.0)) fail("loss escape efficiencies must lie in (0, 1]");
    }
    {
        detail::SectionReader ring(parsed, "ring");
        c.ring_sweep.mode = ring.text("mode", "sweep");
        c.ring_sweep.spectrum_csv = ring.text("spectrum_csv", "");
        c.ring_sweep.t_start = ring.number("t_start", 0.90);
        c.ring_sweep.t_stop = ring.number("t_stop", 0.999);
        c.ring_sweep.t_steps = static_cast<int>(ring.integer("t_steps", 25));
        c.ring_sweep.round_trip_a = ring.number("round_trip_a", 0.978);
        c.ring_sweep.center_wavelength_nm = ring.number("center_wavelength_nm", 1546.23);
        c.ring_sweep.fsr_ghz = ring.number("fsr_ghz", 0.0);
        ring.finish();
        if (c.ring_sweep.mode != "sweep" && c.ring_sweep.mode != "fit")
            fail("ring mode must be 'sweep' or 'fit'");
        if (c.ring_sweep.t_steps < 2) fail("ring t_steps must be >= 2");
        for (double t : {c.ring_sweep.t_start, c.ring_sweep.t_stop})
            if (!(t >= 0.0 && t <= 1.0)) fail("ring t sweep bounds must lie in [0, 1]");
        if (!(c.ring_sweep.round_trip_a > 0.0 && c.ring_sweep.round_trip_a <= 1.0))
            fail("ring round_trip_a must lie in (0, 1]");
    }
    {
        detail::SectionReader output(parsed, "output");
        c.output_directory = output.text("directory", "out");
        output.finish();
    }
    return c;
}

inline RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_string(buf.str(), path.string());
}

}  // namespace biphoton

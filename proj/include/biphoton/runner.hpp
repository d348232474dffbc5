#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "biphoton/config.hpp"
#include "biphoton/io.hpp"
#include "biphoton/loss.hpp"
#include "biphoton/noise.hpp"
#include "biphoton/ring.hpp"
#include "biphoton/sources.hpp"
#include "biphoton/spectral.hpp"
#include "biphoton/tomography.hpp"

// End-to-end runs: build the source fields, synthesize and degrade the
// interferogram quartet, write everything to disk, and drive the reverse
// (extract/compare) path from files so externally recorded quartets can be
// substituted for simulated ones.

namespace biphoton {

enum class OutputFormat { csv, pgm, both };

inline OutputFormat parse_output_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "pgm") return OutputFormat::pgm;
    if (s == "both") return OutputFormat::both;
    throw std::invalid_argument("format must be csv, pgm, or both");
}

namespace runner {

namespace fs = std::filesystem;

inline void maybe_pgm(OutputFormat fmt, const fs::path& csv_path, const RealField2D& field) {
    if (fmt != OutputFormat::csv)
        io::write_pgm(fs::path(csv_path).replace_extension(".pgm"), field);
}

inline const char* mode_name(TomographyMode m) {
    return m == TomographyMode::spontaneous ? "spontaneous" : "stimulated";
}

struct SimulatedRun {
    ComplexField2D phi_ring;
    ComplexField2D phi_waveguide;
    TomographyRun run;                     // ideal quartet
    TomographyRun filtered;                // after the on-chip filter response
    std::array<RealField2D, 4> counts;     // Poisson samples of the filtered quartet
    std::array<RealField2D, 4> smoothed;
};

// Forward model in memory. The clean quartet is the ideal coincidence map;
// the measurement chain (on-chip filter response, then shot noise, then
// smoothing) only enters the counts.
inline SimulatedRun simulate(const RunConfig& cfg, int threads = 1) {
    SimulatedRun sim;
    JsaOptions opt;
    opt.threads = threads;
    sim.phi_ring = cfg.mode == TomographyMode::spontaneous
                       ? jsa_spontaneous_ring(cfg.ring, cfg.pump, cfg.grid, opt)
                       : jsa_stimulated_ring(cfg.ring, cfg.pump, cfg.grid, opt);
    sim.phi_waveguide = jsa_waveguide(cfg.waveguide, cfg.pump, cfg.grid, opt);

    const bool lossy = cfg.escape_signal < 1.0 || cfg.escape_idler < 1.0;
    const auto w = weights_from_eta(cfg.eta, cfg.brightness_ratio);
    const auto thetas = canonical_thetas(cfg.mode);
    sim.run.settings = {cfg.mode, cfg.eta, cfg.brightness_ratio};
    sim.filtered.settings = sim.run.settings;
    for (int k = 0; k < 4; ++k) {
        const SplitterSetting s(cfg.eta, thetas[k]);
        Interferogram frame;
        if (cfg.mode == TomographyMode::stimulated) {
            frame = set_interference(sim.phi_ring, sim.phi_waveguide, s, w);
        } else if (lossy) {
            const auto split = split_jsa_phantom(sim.phi_ring, cfg.escape_signal, cfg.escape_idler);
            frame = lossy_coincidence(split, sim.phi_waveguide, s, w);
        } else {
            frame = coincidence_probability(sim.phi_ring, sim.phi_waveguide, s, w);
        }
        sim.run.frames[k] = frame;
        sim.filtered.frames[k] =
            apply_instrument_response(frame, cfg.filter_signal, cfg.filter_idler);
    }

    sim.counts = sample_run_counts(sim.filtered, cfg.noise);
    for (int k = 0; k < 4; ++k) {
        RealField2D s = gaussian_filter2d(sim.counts[k], cfg.smoothing.sigma_px);
        sim.smoothed[k] = moving_average2d(s, cfg.smoothing.window_px);
    }
    return sim;
}

inline nlohmann::json noise_json(const RunConfig& cfg) {
    return {{"pairs_per_setting", cfg.noise.pairs_per_setting},
            {"seed", cfg.noise.seed},
            {"dark_rate_fraction", cfg.noise.dark_rate_fraction}};
}

// Writes the artifact set of one simulated run and its manifest (run.json).
inline void write_simulated_run(const SimulatedRun& sim, const RunConfig& cfg,
                                const fs::path& out_dir, OutputFormat fmt) {
    fs::create_directories(out_dir);
    io::write_complex_field(out_dir / "phi_ring.csv", sim.phi_ring,
                            {{"source", mode_name(cfg.mode)}});
    io::write_complex_field(out_dir / "phi_waveguide.csv", sim.phi_waveguide,
                            {{"source", "waveguide_reference"}});
    maybe_pgm(fmt, out_dir / "phi_ring.csv", jsi(sim.phi_ring));
    maybe_pgm(fmt, out_dir / "phi_waveguide.csv", jsi(sim.phi_waveguide));

    nlohmann::json frames = nlohmann::json::array();
    const auto thetas = canonical_thetas(cfg.mode);
    for (int k = 0; k < 4; ++k) {
        const std::string clean = "interferogram_" + std::to_string(k) + ".csv";
        const std::string filtered = "filtered_" + std::to_string(k) + ".csv";
        const std::string counts = "counts_" + std::to_string(k) + ".csv";
        const std::string smoothed = "smoothed_" + std::to_string(k) + ".csv";
        const nlohmann::json tags = {{"theta_rad", thetas[k]}, {"eta", cfg.eta}};
        io::write_real_field(out_dir / clean, sim.run.frames[k].map, tags, "interferogram");
        io::write_real_field(out_dir / filtered, sim.filtered.frames[k].map, tags,
                             "interferogram");
        io::write_counts(out_dir / counts, sim.counts[k], tags);
        io::write_real_field(out_dir / smoothed, sim.smoothed[k], tags, "interferogram");
        maybe_pgm(fmt, out_dir / clean, sim.run.frames[k].map);
        maybe_pgm(fmt, out_dir / counts, sim.counts[k]);
        maybe_pgm(fmt, out_dir / smoothed, sim.smoothed[k]);
        frames.push_back({{"theta_rad", thetas[k]},
                          {"clean_csv", clean},
                          {"filtered_csv", filtered},
                          {"counts_csv", counts},
                          {"smoothed_csv", smoothed}});
    }

    const nlohmann::json manifest = {
        {"kind", "tomography_run"},
        {"mode", mode_name(cfg.mode)},
        {"eta", cfg.eta},
        {"brightness_ratio", cfg.brightness_ratio},
        {"thetas_rad", thetas},
        {"grid", io::grid_to_json(cfg.grid)},
        {"frames", frames},
        {"noise", noise_json(cfg)},
        {"smoothing",
         {{"sigma_px", cfg.smoothing.sigma_px}, {"window_px", cfg.smoothing.window_px}}},
        {"jsp_floor", cfg.jsp_floor}};
    io::write_json(out_dir / "run.json", manifest);
}

inline void run_simulate(const RunConfig& cfg, const fs::path& out_dir, OutputFormat fmt,
                         int threads = 1) {
    write_simulated_run(simulate(cfg, threads), cfg, out_dir, fmt);
}

// Rebuilds a TomographyRun from a run directory. source selects which quartet
// to use: "clean", "counts", or "smoothed".
inline TomographyRun load_run(const fs::path& run_dir, const std::string& source) {
    const auto manifest = io::read_json(run_dir / "run.json");
    if (manifest.value("kind", "") != "tomography_run")
        throw std::runtime_error((run_dir / "run.json").string() + ": not a tomography run");
    TomographyRun run;
    const std::string mode = manifest.at("mode").get<std::string>();
    run.settings.mode =
        mode == "stimulated" ? TomographyMode::stimulated : TomographyMode::spontaneous;
    run.settings.eta = manifest.at("eta").get<double>();
    run.settings.brightness_ratio = manifest.value("brightness_ratio", 1.0);
    const auto& frames = manifest.at("frames");
    if (frames.size() != 4) throw std::runtime_error("run manifest must list exactly 4 frames");
    const std::string key = source + "_csv";
    for (int k = 0; k < 4; ++k) {
        const auto& fj = frames[k];
        if (!fj.contains(key))
            throw std::runtime_error("run manifest frame lacks '" + key + "'");
        Interferogram frame;
        frame.map = io::read_real_field(run_dir / fj.at(key).get<std::string>());
        frame.theta_rad = fj.at("theta_rad").get<double>();
        frame.eta = run.settings.eta;
        run.frames[k] = frame;
    }
    run.validate();
    return run;
}

// Contour reference for file-driven extraction: the quartet mean. The
// interference cross terms cancel across the canonical settings, so this is
// proportional to the incoherent intensity sum of the two sources.
inline RealField2D quartet_mean_intensity(const TomographyRun& run) {
    RealField2D mean(run.frames[0].map.grid);
    for (const auto& f : run.frames)
        for (std::size_t k = 0; k < mean.values.size(); ++k)
            mean.values[k] += 0.25 * f.map.values[k];
    return mean;
}

inline nlohmann::json comparison_to_json(const JspComparison& cmp) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& m : cmp.per_level)
        levels.push_back({{"level", m.level},
                          {"pixel_count", m.pixel_count},
                          {"rms_rad", m.rms_rad},
                          {"max_abs_rad", m.max_abs_rad},
                          {"circular_correlation", m.circular_correlation}});
    return {{"per_level", levels},
            {"circular_mean_offset_rad", cmp.circular_mean_offset_rad},
            {"mean_subtracted", cmp.mean_subtracted}};
}

// Extraction from a run directory: phase map CSV plus contour-masked summary
// statistics computed against the quartet-mean intensity.
inline JspMap run_extract(const fs::path& run_dir, const std::string& source, double floor,
                          const fs::path& out_dir, OutputFormat fmt) {
    const TomographyRun run = load_run(run_dir, source);
    const JspMap map = extract_jsp(run, floor);
    fs::create_directories(out_dir);
    io::write_jsp_map(out_dir / "jsp_map.csv", map,
                      {{"source", source}, {"floor", floor}});

    const RealField2D intensity = quartet_mean_intensity(run);
    const auto masks = contour_mask(intensity, {0.25, 0.10, 0.01});
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& m : masks) {
        std::size_t n_inside = 0, n_valid = 0;
        double ms = 0.0, mc = 0.0;
        for (std::size_t k = 0; k < map.phase_rad.size(); ++k) {
            if (!m.inside[k]) continue;
            ++n_inside;
            if (!map.valid[k]) continue;
            ++n_valid;
            ms += std::sin(map.phase_rad[k]);
            mc += std::cos(map.phase_rad[k]);
        }
        levels.push_back({{"level", m.level},
                          {"pixels", n_inside},
                          {"valid_pixels", n_valid},
                          {"circular_mean_rad", std::atan2(ms, mc)}});
    }
    const nlohmann::json metrics = {{"kind", "extraction_metrics"},
                                    {"source", source},
                                    {"floor", floor},
                                    {"valid_pixels", map.valid_count()},
                                    {"contours", levels}};
    io::write_json(out_dir / "extract_metrics.json", metrics);
    if (fmt != OutputFormat::csv) {
        RealField2D phase_vis(map.grid);
        for (std::size_t k = 0; k < phase_vis.values.size(); ++k)
            phase_vis.values[k] = map.valid[k] ? map.phase_rad[k] : -kPi;
        io::write_pgm(out_dir / "jsp_map.pgm", phase_vis);
    }
    return map;
}

inline JspComparison run_compare(const fs::path& map_a, const fs::path& map_b,
                                 const fs::path& intensity_csv, bool subtract_mean,
                                 const fs::path& out_json) {
    const JspMap a = io::read_jsp_map(map_a);
    const JspMap b = io::read_jsp_map(map_b);
    const RealField2D intensity = io::read_real_field(intensity_csv);
    const auto masks = contour_mask(intensity, {0.25, 0.10, 0.01});
    const JspComparison cmp = compare_jsp(a, b, masks, subtract_mean);
    nlohmann::json j = comparison_to_json(cmp);
    j["kind"] = "jsp_comparison";
    j["map_a"] = map_a.filename().string();
    j["map_b"] = map_b.filename().string();
    fs::create_directories(out_json.parent_path().empty() ? fs::path(".") : out_json.parent_path());
    io::write_json(out_json, j);
    return cmp;
}

inline void write_fit_table(const std::vector<LineshapeFit>& table, const fs::path& csv_path,
                            const fs::path& json_path) {
    auto f = io::open_out(csv_path);
    f << "center_hz,fwhm_hz,q_factor,extinction_ratio_db,regime,self_coupling_t,round_trip_a,"
         "residual_rms\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& fit : table) {
        f << io::format_double(fit.center_hz) << ',' << io::format_double(fit.fwhm_hz) << ','
          << io::format_double(fit.q_factor) << ',' << io::format_double(fit.extinction_ratio_db)
          << ',' << to_string(fit.regime) << ',' << io::format_double(fit.self_coupling_t) << ','
          << io::format_double(fit.round_trip_a) << ',' << io::format_double(fit.residual_rms)
          << '\n';
        rows.push_back({{"center_hz", fit.center_hz},
                        {"fwhm_hz", fit.fwhm_hz},
                        {"q_factor", fit.q_factor},
                        {"extinction_ratio_db", fit.extinction_ratio_db},
                        {"regime", to_string(fit.regime)},
                        {"self_coupling_t", fit.self_coupling_t},
                        {"round_trip_a", fit.round_trip_a},
                        {"residual_rms", fit.residual_rms}});
    }
    io::write_json(json_path, {{"kind", "lineshape_fits"}, {"fits", rows}});
}

// Ring analysis: either fit an ingested two-column spectrum or synthesize and
// fit a coupling sweep.
inline std::vector<LineshapeFit> run_ring(const RunConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<LineshapeFit> table;
    const double fsr = cfg.ring_fsr_hz();
    if (cfg.ring_sweep.mode == "fit") {
        if (cfg.ring_sweep.spectrum_csv.empty())
            throw ConfigError("ring mode 'fit' requires spectrum_csv");
        auto f = io::open_in(cfg.ring_sweep.spectrum_csv);
        std::string line;
        if (!std::getline(f, line))
            throw std::runtime_error(cfg.ring_sweep.spectrum_csv + ": empty spectrum");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "wavelength_nm,transmission")
            throw std::runtime_error(cfg.ring_sweep.spectrum_csv +
                                     ": expected header 'wavelength_nm,transmission'");
        std::vector<double> nu, tr;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = io::split_csv_line(line);
            if (cells.size() != 2)
                throw std::runtime_error(cfg.ring_sweep.spectrum_csv + ": malformed row");
            nu.push_back(wavelength_nm_to_hz(io::parse_double(cells[0])));
            tr.push_back(io::parse_double(cells[1]));
        }
        FitOptions opt;
        opt.fsr_hz = fsr;
        table.push_back(fit_lineshape(nu, tr, opt));
    } else {
        std::vector<CouplerSetting> settings;
        const auto& sw = cfg.ring_sweep;
        for (int k = 0; k < sw.t_steps; ++k) {
            const double t = sw.t_start + (sw.t_stop - sw.t_start) * k / (sw.t_steps - 1);
            settings.emplace_back(t, sw.round_trip_a);
        }
        table = regime_sweep(settings, wavelength_nm_to_hz(sw.center_wavelength_nm), fsr);
    }
    write_fit_table(table, out_dir / "ring_fits.csv", out_dir / "ring_fits.json");
    return table;
}

// Full demonstration: spontaneous and seeded tomography, fringe scans, the
// coupling sweep, and a loss study, all under one output directory.
inline void run_demo(const RunConfig& base_cfg, const fs::path& out_dir, OutputFormat fmt,
                     int threads = 1) {
    fs::create_directories(out_dir);
    JsaOptions opt;
    opt.threads = threads;

    // Shared fields.
    const ComplexField2D phi_sp = jsa_spontaneous_ring(base_cfg.ring, base_cfg.pump,
                                                       base_cfg.grid, opt);
    const ComplexField2D phi_st = jsa_stimulated_ring(base_cfg.ring, base_cfg.pump,
                                                      base_cfg.grid, opt);
    const ComplexField2D phi_wg = jsa_waveguide(base_cfg.waveguide, base_cfg.pump,
                                                base_cfg.grid, opt);
    const RealField2D jsi_ring = jsi(phi_sp);
    io::write_real_field(out_dir / "jsi_ring.csv", jsi_ring, nlohmann::json::object(), "jsi");
    maybe_pgm(fmt, out_dir / "jsi_ring.csv", jsi_ring);
    io::write_jsp_map(out_dir / "jsp_truth_spontaneous.csv",
                      jsp(phi_sp, 0.01, JspProvenance::spontaneous));
    io::write_jsp_map(out_dir / "jsp_truth_stimulated.csv",
                      jsp(phi_st, 0.01, JspProvenance::stimulated));

    // Spontaneous tomography.
    {
        RunConfig cfg = base_cfg;
        cfg.mode = TomographyMode::spontaneous;
        SimulatedRun sim = simulate(cfg, threads);
        write_simulated_run(sim, cfg, out_dir / "spontaneous", fmt);
        run_extract(out_dir / "spontaneous", "clean", cfg.jsp_floor,
                    out_dir / "spontaneous" / "extract_clean", fmt);
        run_extract(out_dir / "spontaneous", "smoothed", cfg.jsp_floor,
                    out_dir / "spontaneous" / "extract_smoothed", fmt);
        run_compare(out_dir / "spontaneous" / "extract_smoothed" / "jsp_map.csv",
                    out_dir / "jsp_truth_spontaneous.csv", out_dir / "jsi_ring.csv", false,
                    out_dir / "spontaneous" / "comparison_vs_truth.json");
    }

    // Seeded (stimulated) tomography.
    {
        RunConfig cfg = base_cfg;
        cfg.mode = TomographyMode::stimulated;
        SimulatedRun sim = simulate(cfg, threads);
        write_simulated_run(sim, cfg, out_dir / "stimulated", fmt);
        run_extract(out_dir / "stimulated", "clean", cfg.jsp_floor,
                    out_dir / "stimulated" / "extract_clean", fmt);
        run_compare(out_dir / "stimulated" / "extract_clean" / "jsp_map.csv",
                    out_dir / "jsp_truth_stimulated.csv", out_dir / "jsi_ring.csv", true,
                    out_dir / "stimulated" / "comparison_vs_truth.json");
    }

    // Fringe scans at the brightest pixel: quantum, classical, seeded.
    {
        std::size_t peak = 0;
        for (std::size_t k = 0; k < jsi_ring.values.size(); ++k)
            if (jsi_ring.values[k] > jsi_ring.values[peak]) peak = k;
        const auto w = weights_from_eta(base_cfg.eta, base_cfg.brightness_ratio);
        const int n_theta = 64;
        std::vector<double> thetas(n_theta), quantum(n_theta), classical(n_theta), seeded(n_theta);
        for (int k = 0; k < n_theta; ++k) {
            const double th = kTwoPi * k / n_theta;
            thetas[k] = th;
            const SplitterSetting s(base_cfg.eta, th);
            quantum[k] = coincidence_probability(phi_sp, phi_wg, s, w).map.values[peak];
            classical[k] = classical_fringe(phi_sp, phi_wg, s, w).map.values[peak];
            seeded[k] = set_interference(phi_st, phi_wg, s, w).map.values[peak];
        }
        auto csv = io::open_out(out_dir / "fringes.csv");
        csv << "theta_rad,coincidence,classical,set\n";
        for (int k = 0; k < n_theta; ++k)
            csv << io::format_double(thetas[k]) << ',' << io::format_double(quantum[k]) << ','
                << io::format_double(classical[k]) << ',' << io::format_double(seeded[k]) << '\n';
        const FringeFit fq = fit_fringe(thetas, quantum);
        const FringeFit fc = fit_fringe(thetas, classical);
        const FringeFit fs_fit = fit_fringe(thetas, seeded);
        auto fit_json = [](const FringeFit& fit) {
            return nlohmann::json{{"mean", fit.mean},
                                  {"amplitude", fit.amplitude},
                                  {"period_rad", fit.period},
                                  {"visibility", fit.visibility()}};
        };
        io::write_json(out_dir / "fringes.json", {{"kind", "fringe_fits"},
                                                  {"coincidence", fit_json(fq)},
                                                  {"classical", fit_json(fc)},
                                                  {"set", fit_json(fs_fit)}});
    }

    // Coupling sweep table.
    run_ring(base_cfg, out_dir / "ring");

    // Loss study: extraction with and without phantom-channel loss.
    {
        const auto w = weights_from_eta(base_cfg.eta, base_cfg.brightness_ratio);
        const TomographyRun clean_run =
            synthesize_run(phi_sp, phi_wg, base_cfg.eta, TomographyMode::spontaneous,
                           base_cfg.brightness_ratio);
        const JspMap clean_map = extract_jsp(clean_run, base_cfg.jsp_floor);
        const double es = base_cfg.escape_signal < 1.0 ? base_cfg.escape_signal : 0.5;
        const double ei = base_cfg.escape_idler < 1.0 ? base_cfg.escape_idler : 0.5;
        const LossyJsa lossy = split_jsa_phantom(phi_sp, es, ei);
        TomographyRun lossy_run;
        lossy_run.settings = {TomographyMode::spontaneous, base_cfg.eta,
                              base_cfg.brightness_ratio};
        const auto thetas = canonical_thetas(TomographyMode::spontaneous);
        for (int k = 0; k < 4; ++k)
            lossy_run.frames[k] =
                lossy_coincidence(lossy, phi_wg, SplitterSetting(base_cfg.eta, thetas[k]), w);
        const JspMap lossy_map = extract_jsp(lossy_run, base_cfg.jsp_floor);

        double max_dev = 0.0;
        std::size_t common = 0;
        for (std::size_t k = 0; k < clean_map.phase_rad.size(); ++k) {
            if (!clean_map.valid[k] || !lossy_map.valid[k]) continue;
            ++common;
            max_dev = std::max(max_dev, std::abs(wrap_phase(lossy_map.phase_rad[k] -
                                                            clean_map.phase_rad[k])));
        }
        const auto norms = component_norms(lossy);
        io::write_json(out_dir / "loss_report.json",
                       {{"kind", "loss_report"},
                        {"escape_signal", es},
                        {"escape_idler", ei},
                        {"component_norms",
                         {{"rr", norms.rr}, {"rl", norms.rl}, {"lr", norms.lr}, {"ll", norms.ll}}},
                        {"norm_total", norms.total()},
                        {"jsp_max_deviation_rad", max_dev},
                        {"compared_pixels", common}});
    }
}

}  // namespace runner

}  // namespace biphoton

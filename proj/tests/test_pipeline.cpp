#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "biphoton/runner.hpp"

using namespace biphoton;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
    auto c = RunConfig::defaults();
    c.grid = FrequencyGrid(c.grid.center_signal_hz, c.grid.center_idler_hz, 25e9, 25e9, 24, 24);
    c.noise.pairs_per_setting = 2e4;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

bool identical_trees(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
        if (!fs::exists(b / r)) return false;
        if (slurp(a / r) != slurp(b / r)) return false;
    }
    std::size_t count_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) ++count_b;
    return count_b == rel.size();
}

}  // namespace

TEST_CASE("simulate writes the declared artifact set") {
    const auto dir = fs::temp_directory_path() / "biphoton_sim_test";
    fs::remove_all(dir);
    runner::run_simulate(small_config(), dir, OutputFormat::both);
    for (const char* name :
         {"phi_ring.csv", "phi_ring.json", "phi_waveguide.csv", "run.json",
          "interferogram_0.csv", "interferogram_3.csv", "counts_0.csv", "counts_3.csv",
          "smoothed_0.csv", "smoothed_3.csv", "interferogram_0.pgm"})
        CHECK(fs::exists(dir / name));
    const auto manifest = io::read_json(dir / "run.json");
    CHECK(manifest.at("mode") == "spontaneous");
    CHECK(manifest.at("frames").size() == 4);
}

TEST_CASE("extract on a noiseless simulated run reproduces arg(phi_ring)") {
    auto cfg = small_config();
    cfg.noise.pairs_per_setting = 0.0;  // no counts; extraction runs on the clean quartet
    const auto dir = fs::temp_directory_path() / "biphoton_roundtrip_test";
    fs::remove_all(dir);
    runner::run_simulate(cfg, dir, OutputFormat::csv);

    const auto map = runner::run_extract(dir, "clean", cfg.jsp_floor, dir / "extract",
                                         OutputFormat::csv);
    const auto phi_ring = io::read_complex_field(dir / "phi_ring.csv");
    const auto truth = jsp(phi_ring, 0.0);
    // The reference phase is flat only to ~1e-3 rad; the recovered map equals
    // arg(phi_ring) - arg(phi_wg).
    const auto phi_wg = io::read_complex_field(dir / "phi_waveguide.csv");
    std::size_t checked = 0;
    for (std::size_t k = 0; k < map.phase_rad.size(); ++k) {
        if (!map.valid[k]) continue;
        const double expected = wrap_phase(truth.phase_rad[k] - std::arg(phi_wg.values[k]));
        CHECK(std::abs(wrap_phase(map.phase_rad[k] - expected)) < 1e-9);
        // Against arg(phi_ring) directly the error is bounded by the
        // reference phase flatness.
        CHECK(std::abs(wrap_phase(map.phase_rad[k] - truth.phase_rad[k])) < 2e-3);
        ++checked;
    }
    CHECK(checked > 0);
    CHECK(fs::exists(dir / "extract" / "jsp_map.csv"));
    CHECK(fs::exists(dir / "extract" / "extract_metrics.json"));
}

TEST_CASE("compare runs end to end from files") {
    auto cfg = small_config();
    const auto dir = fs::temp_directory_path() / "biphoton_compare_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    JsaOptions opt;
    const auto phi = jsa_spontaneous_ring(cfg.ring, cfg.pump, cfg.grid, opt);
    io::write_jsp_map(dir / "a.csv", jsp(phi, 1e-4));
    io::write_jsp_map(dir / "b.csv", jsp(phi, 1e-4));
    io::write_real_field(dir / "intensity.csv", jsi(phi));
    const auto report =
        runner::run_compare(dir / "a.csv", dir / "b.csv", dir / "intensity.csv", false,
                            dir / "cmp.json");
    REQUIRE(report.per_level.size() == 3);
    for (const auto& m : report.per_level) CHECK(m.rms_rad == doctest::Approx(0.0));
    CHECK(fs::exists(dir / "cmp.json"));
}

TEST_CASE("ring sweep command writes the fit table") {
    auto cfg = small_config();
    cfg.ring_sweep.t_steps = 5;
    const auto dir = fs::temp_directory_path() / "biphoton_ring_test";
    fs::remove_all(dir);
    const auto table = runner::run_ring(cfg, dir);
    CHECK(table.size() == 5);
    CHECK(fs::exists(dir / "ring_fits.csv"));
    CHECK(fs::exists(dir / "ring_fits.json"));
}

TEST_CASE("ring fit command ingests a two-column wavelength spectrum") {
    auto cfg = small_config();
    const auto dir = fs::temp_directory_path() / "biphoton_ringfit_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    // Synthesize a spectrum in wavelength around 1546.23 nm.
    const double center = wavelength_nm_to_hz(1546.23);
    const double fsr = cfg.ring_fsr_hz();
    const CouplerSetting truth(0.93, 0.978);
    {
        auto f = io::open_out(dir / "spectrum.csv");
        f << "wavelength_nm,transmission\n";
        for (int k = 0; k < 2001; ++k) {
            const double nu = center + fsr * (k / 2000.0 - 0.5);
            f << io::format_double(hz_to_wavelength_nm(nu)) << ','
              << io::format_double(transmission_vs_frequency(truth, nu, center, fsr)) << '\n';
        }
    }
    cfg.ring_sweep.mode = "fit";
    cfg.ring_sweep.spectrum_csv = (dir / "spectrum.csv").string();
    const auto table = runner::run_ring(cfg, dir);
    REQUIRE(table.size() == 1);
    CHECK(table[0].center_hz == doctest::Approx(center).epsilon(1e-6));
    CHECK(table[0].self_coupling_t == doctest::Approx(0.93).epsilon(0.02));
}

TEST_CASE("demo runs are byte-identical under a fixed seed") {
    auto cfg = small_config();
    cfg.grid = FrequencyGrid(cfg.grid.center_signal_hz, cfg.grid.center_idler_hz, 25e9, 25e9,
                             16, 16);
    cfg.ring_sweep.t_steps = 4;
    const auto dir_a = fs::temp_directory_path() / "biphoton_demo_a";
    const auto dir_b = fs::temp_directory_path() / "biphoton_demo_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    runner::run_demo(cfg, dir_a, OutputFormat::both);
    runner::run_demo(cfg, dir_b, OutputFormat::both);
    CHECK(identical_trees(dir_a, dir_b));
}

TEST_CASE("threaded and serial evaluation produce identical fields") {
    auto cfg = small_config();
    JsaOptions serial, threaded;
    threaded.threads = 2;
    const auto a = jsa_spontaneous_ring(cfg.ring, cfg.pump, cfg.grid, serial);
    const auto b = jsa_spontaneous_ring(cfg.ring, cfg.pump, cfg.grid, threaded);
    CHECK(a.values == b.values);
}

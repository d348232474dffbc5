#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biphoton/grid.hpp"

// File formats:
//   - fields: CSV with header nu_s_offset_hz,nu_i_offset_hz,re[,im], rows in
//     storage order (signal index fastest), doubles printed with %.17g so a
//     round-trip is exact;
//   - a JSON manifest alongside each CSV carries the grid and tags;
//   - count maps: same layout with an integer counts column;
//   - phase maps: nu_s_offset_hz,nu_i_offset_hz,phase_rad,valid;
//   - optional 8-bit PGM (P5) heatmaps, min..max mapped to 0..255.

namespace biphoton {

namespace io {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("failed to parse number '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    return f;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    return f;
}

inline nlohmann::json grid_to_json(const FrequencyGrid& g) {
    return {{"center_signal_hz", g.center_signal_hz}, {"center_idler_hz", g.center_idler_hz},
            {"span_signal_hz", g.span_signal_hz},     {"span_idler_hz", g.span_idler_hz},
            {"n_signal", g.n_signal},                 {"n_idler", g.n_idler}};
}

inline FrequencyGrid grid_from_json(const nlohmann::json& j) {
    return FrequencyGrid(j.at("center_signal_hz").get<double>(),
                         j.at("center_idler_hz").get<double>(),
                         j.at("span_signal_hz").get<double>(),
                         j.at("span_idler_hz").get<double>(), j.at("n_signal").get<int>(),
                         j.at("n_idler").get<int>());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto f = open_out(path);
    f << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    auto f = open_in(path);
    return nlohmann::json::parse(f);
}

// Writes the CSV plus a manifest <stem>.json; extra keys are merged into the
// manifest (theta/eta tags, provenance, ...).
inline void write_complex_field(const std::filesystem::path& csv_path,
                                const ComplexField2D& field,
                                nlohmann::json extra = nlohmann::json::object()) {
    auto f = open_out(csv_path);
    f << "nu_s_offset_hz,nu_i_offset_hz,re,im\n";
    const auto& g = field.grid;
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i) {
            const auto& v = field.at(i, j);
            f << format_double(g.signal_detuning_hz(i)) << ','
              << format_double(g.idler_detuning_hz(j)) << ',' << format_double(v.real())
              << ',' << format_double(v.imag()) << '\n';
        }
    nlohmann::json manifest = {{"kind", "complex_field"},
                               {"grid", grid_to_json(g)},
                               {"csv", csv_path.filename().string()}};
    manifest.update(extra);
    write_json(std::filesystem::path(csv_path).replace_extension(".json"), manifest);
}

inline void write_real_field(const std::filesystem::path& csv_path, const RealField2D& field,
                             nlohmann::json extra = nlohmann::json::object(),
                             const char* kind = "real_field") {
    auto f = open_out(csv_path);
    f << "nu_s_offset_hz,nu_i_offset_hz,re\n";
    const auto& g = field.grid;
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i)
            f << format_double(g.signal_detuning_hz(i)) << ','
              << format_double(g.idler_detuning_hz(j)) << ',' << format_double(field.at(i, j))
              << '\n';
    nlohmann::json manifest = {{"kind", kind},
                               {"grid", grid_to_json(g)},
                               {"csv", csv_path.filename().string()}};
    manifest.update(extra);
    write_json(std::filesystem::path(csv_path).replace_extension(".json"), manifest);
}

inline void write_counts(const std::filesystem::path& csv_path, const RealField2D& counts,
                         nlohmann::json extra = nlohmann::json::object()) {
    auto f = open_out(csv_path);
    f << "nu_s_offset_hz,nu_i_offset_hz,counts\n";
    const auto& g = counts.grid;
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i)
            f << format_double(g.signal_detuning_hz(i)) << ','
              << format_double(g.idler_detuning_hz(j)) << ','
              << static_cast<long long>(std::llround(counts.at(i, j))) << '\n';
    nlohmann::json manifest = {{"kind", "counts"},
                               {"grid", grid_to_json(g)},
                               {"csv", csv_path.filename().string()}};
    manifest.update(extra);
    write_json(std::filesystem::path(csv_path).replace_extension(".json"), manifest);
}

inline void write_jsp_map(const std::filesystem::path& csv_path, const JspMap& map,
                          nlohmann::json extra = nlohmann::json::object()) {
    auto f = open_out(csv_path);
    f << "nu_s_offset_hz,nu_i_offset_hz,phase_rad,valid\n";
    const auto& g = map.grid;
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i) {
            const std::size_t k = g.index(i, j);
            f << format_double(g.signal_detuning_hz(i)) << ','
              << format_double(g.idler_detuning_hz(j)) << ','
              << format_double(map.phase_rad[k]) << ',' << (map.valid[k] ? 1 : 0) << '\n';
        }
    const char* prov = map.provenance == JspProvenance::spontaneous ? "spontaneous"
                       : map.provenance == JspProvenance::stimulated ? "stimulated"
                                                                     : "reference";
    nlohmann::json manifest = {{"kind", "jsp_map"},
                               {"grid", grid_to_json(g)},
                               {"csv", csv_path.filename().string()},
                               {"provenance", prov}};
    manifest.update(extra);
    write_json(std::filesystem::path(csv_path).replace_extension(".json"), manifest);
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                           const std::string& expected_header,
                                                           std::size_t expected_rows) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line))
        throw std::runtime_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw std::runtime_error(path.string() + ": unexpected header '" + line + "' (want '" +
                                 expected_header + "')");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(expected_rows);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.size() != expected_rows)
        throw std::runtime_error(path.string() + ": row count " + std::to_string(rows.size()) +
                                 " does not match grid size " + std::to_string(expected_rows));
    return rows;
}

}  // namespace detail

inline ComplexField2D read_complex_field(const std::filesystem::path& csv_path) {
    const auto manifest = read_json(std::filesystem::path(csv_path).replace_extension(".json"));
    const auto grid = grid_from_json(manifest.at("grid"));
    auto rows = detail::read_csv_rows(csv_path, "nu_s_offset_hz,nu_i_offset_hz,re,im",
                                      grid.size());
    ComplexField2D field(grid);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 4)
            throw std::runtime_error(csv_path.string() + ": malformed row " + std::to_string(k + 2));
        field.values[k] = {parse_double(rows[k][2]), parse_double(rows[k][3])};
    }
    return field;
}

inline RealField2D read_real_field(const std::filesystem::path& csv_path) {
    const auto manifest = read_json(std::filesystem::path(csv_path).replace_extension(".json"));
    const auto grid = grid_from_json(manifest.at("grid"));
    const std::string header =
        manifest.at("kind").get<std::string>() == "counts" ? "nu_s_offset_hz,nu_i_offset_hz,counts"
                                                           : "nu_s_offset_hz,nu_i_offset_hz,re";
    auto rows = detail::read_csv_rows(csv_path, header, grid.size());
    RealField2D field(grid);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 3)
            throw std::runtime_error(csv_path.string() + ": malformed row " + std::to_string(k + 2));
        field.values[k] = parse_double(rows[k][2]);
    }
    return field;
}

inline JspMap read_jsp_map(const std::filesystem::path& csv_path) {
    const auto manifest = read_json(std::filesystem::path(csv_path).replace_extension(".json"));
    const auto grid = grid_from_json(manifest.at("grid"));
    auto rows = detail::read_csv_rows(csv_path, "nu_s_offset_hz,nu_i_offset_hz,phase_rad,valid",
                                      grid.size());
    JspMap map(grid);
    const std::string prov = manifest.value("provenance", "reference");
    map.provenance = prov == "spontaneous" ? JspProvenance::spontaneous
                     : prov == "stimulated" ? JspProvenance::stimulated
                                            : JspProvenance::reference;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != 4)
            throw std::runtime_error(csv_path.string() + ": malformed row " + std::to_string(k + 2));
        map.phase_rad[k] = parse_double(rows[k][2]);
        map.valid[k] = rows[k][3] == "1" ? 1 : 0;
    }
    return map;
}

// 8-bit binary PGM heatmap, min..max stretched to 0..255.
inline void write_pgm(const std::filesystem::path& path, const RealField2D& field) {
    const auto& g = field.grid;
    double lo = field.values[0], hi = field.values[0];
    for (double v : field.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi > lo ? hi - lo : 1.0;
    auto f = open_out(path);
    f << "P5\n" << g.n_signal << " " << g.n_idler << "\n255\n";
    for (int j = 0; j < g.n_idler; ++j)
        for (int i = 0; i < g.n_signal; ++i) {
            const double norm = (field.at(i, j) - lo) / range;
            const auto byte = static_cast<unsigned char>(std::lround(norm * 255.0));
            f.put(static_cast<char>(byte));
        }
}

}  // namespace io

}  // namespace biphoton

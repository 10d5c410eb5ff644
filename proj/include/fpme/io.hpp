#pragma once

// File formats. Field files are flat binary: a 24-byte header (dim and n as
// little-endian u64, L as little-endian f64) followed by the row-major f64
// payload. CSV forms exist for plotting only; all round-tripping goes through
// the binary form. JSON reports always carry schema_version and the full
// config echo so a result file is reproducible on its own.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpme/diagnostics.hpp"
#include "fpme/evolution.hpp"
#include "fpme/grid.hpp"
#include "fpme/resolvent.hpp"

namespace fpme {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("field file: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline void write_field(const std::filesystem::path& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  detail::put_u64(os, static_cast<std::uint64_t>(f.grid.dim));
  detail::put_u64(os, static_cast<std::uint64_t>(f.grid.points_per_dim));
  detail::put_f64(os, f.grid.half_width);
  for (double v : f.values) detail::put_f64(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Field read_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  const auto dim = static_cast<int>(detail::get_u64(is));
  const auto n = static_cast<std::size_t>(detail::get_u64(is));
  const double L = detail::get_f64(is);
  Field f = make_field(make_grid(dim, L, n));
  for (double& v : f.values) v = detail::get_f64(is);
  if (!is) throw std::runtime_error("field file: truncated payload: " + path.string());
  if (!all_finite(f)) throw std::runtime_error("field file: non-finite values: " + path.string());
  return f;
}

// plotting form: one sample per row, coordinates then value
inline void write_field_csv(const std::filesystem::path& path, const Field& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.precision(17);
  if (f.grid.dim == 1) {
    os << "x,value\n";
    for (std::size_t i = 0; i < f.grid.points_per_dim; ++i)
      os << f.grid.coord(i) << "," << f.values[i] << "\n";
  } else {
    os << "x,y,value\n";
    const std::size_t n = f.grid.points_per_dim;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        os << f.grid.coord(i) << "," << f.grid.coord(j) << "," << f.values[i * n + j] << "\n";
  }
}

inline void write_series_csv(const std::filesystem::path& path,
                             const std::vector<SeriesRow>& series) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.precision(17);
  os << "t,mass,L1,L2,Lm+1,Linf\n";
  for (const SeriesRow& row : series)
    os << row.t << "," << row.mass << "," << row.l1 << "," << row.l2 << "," << row.lmp1 << ","
       << row.linf << "\n";
}

// ---------------------------------------------------------------- JSON forms

inline nlohmann::json to_json(const SolveReport& rep) {
  return {{"iterations", rep.iterations},
          {"final_residual", rep.final_residual},
          {"final_energy", rep.final_energy},
          {"step_sizes",
           {{"min", rep.step_sizes.min},
            {"max", rep.step_sizes.max},
            {"mean", rep.step_sizes.mean},
            {"count", rep.step_sizes.count}}},
          {"converged", rep.converged},
          {"method", rep.method},
          {"operator_applies", rep.operator_applies}};
}

inline nlohmann::json to_json(const DiagnosticsReport& rep) {
  nlohmann::json margins = nlohmann::json::object();
  for (const auto& [k, v] : rep.margins) margins[k] = v;
  return {{"check", rep.check},   {"inputs", rep.inputs},       {"margins", margins},
          {"tolerance", rep.tolerance}, {"pass", rep.pass},     {"notes", rep.notes}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << doc.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  return nlohmann::json::parse(is);
}

// trajectory directory layout: snapshot_<k>.field files, series.csv,
// report.json with the config echo and one SolveReport per step
inline void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                             const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  write_series_csv(dir / "series.csv", traj.series);
  nlohmann::json steps = nlohmann::json::array();
  for (const SolveReport& rep : traj.reports) steps.push_back(to_json(rep));
  nlohmann::json snapshots = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "snapshot_%04zu.field", i);
    write_field(dir / name, traj.snapshots[i]);
    snapshots.push_back({{"file", name}, {"t", traj.times[i]}});
  }
  write_json(dir / "report.json", {{"schema_version", kSchemaVersion},
                                   {"config", config_echo},
                                   {"snapshots", snapshots},
                                   {"steps", steps},
                                   {"failed", traj.failed},
                                   {"failed_step", traj.failed_step}});
}

struct LoadedTrajectory {
  std::vector<double> times;
  std::vector<Field> snapshots;
  nlohmann::json config_echo;
};

inline LoadedTrajectory read_trajectory(const std::filesystem::path& dir) {
  const nlohmann::json report = read_json(dir / "report.json");
  if (!report.contains("snapshots"))
    throw std::runtime_error("report.json: missing snapshots list: " + dir.string());
  LoadedTrajectory out;
  out.config_echo = report.value("config", nlohmann::json::object());
  for (const auto& entry : report.at("snapshots")) {
    out.times.push_back(entry.at("t").get<double>());
    out.snapshots.push_back(read_field(dir / entry.at("file").get<std::string>()));
  }
  return out;
}

inline void write_diagnostics(const std::filesystem::path& path,
                              const std::vector<DiagnosticsReport>& reports,
                              const nlohmann::json& config_echo) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DiagnosticsReport& rep : reports) arr.push_back(to_json(rep));
  write_json(path, {{"schema_version", kSchemaVersion}, {"config", config_echo},
                    {"diagnostics", arr}});
}

}  // namespace fpme

#include "distopt/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace distopt {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_vtk(const Mesh2D& mesh, const std::vector<VtkPointField>& point_fields,
               const std::vector<VtkCellField>& cell_fields, const std::string& path,
               const std::string& title) {
  for (const auto& f : point_fields) {
    const Eigen::Index expect = f.is_vector ? 2 * mesh.node_count() : mesh.node_count();
    if (f.values.size() != expect)
      throw IoError("vtk: point field '" + f.name + "' has wrong size");
  }
  for (const auto& f : cell_fields)
    if (f.values.size() != mesh.element_count())
      throw IoError("vtk: cell field '" + f.name + "' has wrong size");

  auto out = open_out(path);
  char buf[128];
  out << "# vtk DataFile Version 2.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (int k = 0; k < mesh.node_count(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g 0\n", mesh.node_x(k), mesh.node_y(k));
    out << buf;
  }
  out << "CELLS " << mesh.element_count() << " " << 5 * mesh.element_count() << "\n";
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto n = mesh.element_nodes(e);
    out << "4 " << n[0] << " " << n[1] << " " << n[2] << " " << n[3] << "\n";
  }
  out << "CELL_TYPES " << mesh.element_count() << "\n";
  for (int e = 0; e < mesh.element_count(); ++e) out << "9\n";

  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.node_count() << "\n";
    for (const auto& f : point_fields) {
      if (f.is_vector) {
        out << "VECTORS " << f.name << " double\n";
        for (int k = 0; k < mesh.node_count(); ++k) {
          std::snprintf(buf, sizeof(buf), "%.9g %.9g 0\n", f.values[2 * k], f.values[2 * k + 1]);
          out << buf;
        }
      } else {
        out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (int k = 0; k < mesh.node_count(); ++k) {
          std::snprintf(buf, sizeof(buf), "%.9g\n", f.values[k]);
          out << buf;
        }
      }
    }
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.element_count() << "\n";
    for (const auto& f : cell_fields) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (int e = 0; e < mesh.element_count(); ++e) {
        std::snprintf(buf, sizeof(buf), "%.9g\n", f.values[e]);
        out << buf;
      }
    }
  }
  finish(out, path);
}

void write_pgm(const Mesh2D& mesh, const Eigen::VectorXd& element_heaviside,
               const std::string& path) {
  if (element_heaviside.size() != mesh.element_count())
    throw IoError("pgm: field size mismatch");
  auto out = open_out(path);
  out << "P2\n" << mesh.nx << " " << mesh.ny << "\n255\n";
  for (int j = mesh.ny - 1; j >= 0; --j) {
    for (int i = 0; i < mesh.nx; ++i) {
      const double h = element_heaviside[mesh.element_index(i, j)];
      const int pixel = std::min(255, std::max(0, static_cast<int>(std::lround(255.0 * h))));
      out << pixel << (i + 1 == mesh.nx ? "\n" : " ");
    }
  }
  finish(out, path);
}

namespace {

std::string history_row(const HistoryRecord& r, bool with_wall) {
  std::string line = std::to_string(r.iter);
  line += "," + format_double(r.combined);
  line += "," + format_double(r.compliance);
  line += "," + format_double(r.distortion);
  line += "," + format_double(r.volume);
  line += "," + format_double(r.lambda);
  if (with_wall) line += "," + std::to_string(r.wall_ms);
  return line + "\n";
}

}  // namespace

void write_history_csv(const std::vector<HistoryRecord>& history, const std::string& path) {
  auto out = open_out(path);
  out << kHistoryHeader << "\n";
  for (const auto& r : history) out << history_row(r, true);
  finish(out, path);
}

std::string history_csv_without_wall(const std::vector<HistoryRecord>& history) {
  std::string s = "iter,F,F_MC,F_AM,volume,lambda\n";
  for (const auto& r : history) s += history_row(r, false);
  return s;
}

void write_profile_csv(const std::vector<std::pair<double, double>>& profile,
                       const std::string& path) {
  auto out = open_out(path);
  out << "x,u_y\n";
  for (const auto& [x, uy] : profile) out << format_double(x) << "," << format_double(uy) << "\n";
  finish(out, path);
}

std::vector<std::pair<double, double>> read_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile: " + path);
  std::vector<std::pair<double, double>> profile;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("x,", 0) == 0 || line.rfind("x ,", 0) == 0) continue;  // header
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("profile: malformed line '" + line + "'");
    try {
      profile.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError("profile: non-numeric entry in line '" + line + "'");
    }
  }
  if (profile.empty()) throw IoError("profile: no samples in " + path);
  return profile;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["run_id"] = manifest.run_id;
  j["command"] = manifest.command;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["termination"] = manifest.termination;
  j["outputs"] = manifest.outputs;
  j["config"] = manifest.config;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  finish(out, path);
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_id_for(const nlohmann::json& config_echo, const std::string& command) {
  const std::string payload = command + "\n" + config_echo.dump();
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a 64
  for (const unsigned char c : payload) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace distopt

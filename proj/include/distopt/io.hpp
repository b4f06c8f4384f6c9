// File exports: legacy-text VTK fields, history/profile CSVs, grayscale PGM
// density images and the run manifest.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "distopt/mesh.hpp"
#include "distopt/optimizer.hpp"

namespace distopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VtkPointField {
  std::string name;
  Eigen::VectorXd values;  // node_count scalars, or 2*node_count interleaved
  bool is_vector = false;
};

struct VtkCellField {
  std::string name;
  Eigen::VectorXd values;  // element_count scalars
};

void write_vtk(const Mesh2D& mesh, const std::vector<VtkPointField>& point_fields,
               const std::vector<VtkCellField>& cell_fields, const std::string& path,
               const std::string& title = "fields");

// pixel = round(255·H_e), row-major, top row first
void write_pgm(const Mesh2D& mesh, const Eigen::VectorXd& element_heaviside,
               const std::string& path);

inline constexpr const char* kHistoryHeader = "iter,F,F_MC,F_AM,volume,lambda,wall_ms";

void write_history_csv(const std::vector<HistoryRecord>& history, const std::string& path);

// the history CSV with the volatile wall-clock column removed, for
// byte-level run comparisons
std::string history_csv_without_wall(const std::vector<HistoryRecord>& history);

void write_profile_csv(const std::vector<std::pair<double, double>>& profile,
                       const std::string& path);
std::vector<std::pair<double, double>> read_profile_csv(const std::string& path);

struct RunManifest {
  std::string run_id;
  std::string command;
  std::string started_at;
  std::string finished_at;
  std::string termination;
  std::vector<std::string> outputs;
  nlohmann::json config;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

std::string iso8601_now();
std::string run_id_for(const nlohmann::json& config_echo, const std::string& command);
std::string format_double(double value);  // shortest exact round-trip (%.17g)

}  // namespace distopt

#include "amot/output.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace amot {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

namespace {

constexpr const char* kCsvHeader = "k,t,tau,dofs,eps_T,eps_S,eta,rejects_T,rejects_S,wall_ms";

std::string record_row(const StepRecord& r) {
  std::ostringstream os;
  os << r.k << ',' << format_double(r.t) << ',' << format_double(r.tau) << ',' << r.dofs << ','
     << format_double(r.eps_T) << ',' << format_double(r.eps_S) << ',' << format_double(r.eta)
     << ',' << r.rejects_T << ',' << r.rejects_S << ',' << format_double(r.wall_ms);
  return os.str();
}

}  // namespace

RunWriter::RunWriter(std::string dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  csv_path_ = (fs::path(dir_) / "steps.csv").string();
  std::ofstream f(csv_path_, std::ios::trunc);
  if (!f) throw std::runtime_error("output directory not writable: " + dir_);
  f << kCsvHeader << '\n';
  if (!f.good()) throw std::runtime_error("failed writing " + csv_path_);
}

void RunWriter::append_record(const StepRecord& rec) {
  if (!active()) return;
  std::ofstream f(csv_path_, std::ios::app);
  if (!f) throw std::runtime_error("failed opening " + csv_path_);
  f << record_row(rec) << '\n';
}

void RunWriter::write_snapshot(int k, const DgFunction& u) {
  if (!active()) return;
  char name[32];
  std::snprintf(name, sizeof(name), "solution_%06d.vtk", k);
  write_vtk(u, (fs::path(dir_) / name).string());
}

void RunWriter::write_summary(const RunResult& result, const Experiment& experiment,
                              RunMode mode) {
  if (!active()) return;
  std::ofstream f(fs::path(dir_) / "run_summary.txt", std::ios::trunc);
  if (!f) return;
  f << "experiment: " << experiment.name << '\n';
  f << "mode: " << (mode == RunMode::adaptive ? "adaptive" : "uniform") << '\n';
  f << "steps: " << result.steps.size() << '\n';
  if (!result.steps.empty()) {
    const StepRecord& last = result.steps.back();
    f << "final_t: " << format_double(last.t) << '\n';
    f << "final_dofs: " << last.dofs << '\n';
    int min_dofs = last.dofs, max_dofs = last.dofs;
    int rejects_T = 0, rejects_S = 0;
    for (const StepRecord& r : result.steps) {
      min_dofs = std::min(min_dofs, r.dofs);
      max_dofs = std::max(max_dofs, r.dofs);
      rejects_T += r.rejects_T;
      rejects_S += r.rejects_S;
    }
    f << "min_dofs: " << min_dofs << '\n';
    f << "max_dofs: " << max_dofs << '\n';
    f << "rejects_T: " << rejects_T << '\n';
    f << "rejects_S: " << rejects_S << '\n';
  }
  f << "overshoot_above: " << format_double(result.overshoot_above) << '\n';
  f << "overshoot_below: " << format_double(result.overshoot_below) << '\n';
}

void RunWriter::close() {}

void write_steps_csv(const std::vector<StepRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << kCsvHeader << '\n';
  for (const StepRecord& r : records) f << record_row(r) << '\n';
}

void write_vtk(const DgFunction& u, const std::string& path) {
  const Mesh& mesh = *u.mesh;
  const int nt = mesh.num_triangles();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);

  f << "# vtk DataFile Version 3.0\n";
  f << "amot solution snapshot\n";
  f << "ASCII\n";
  f << "DATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << 3 * nt << " double\n";
  for (int i = 0; i < nt; ++i) {
    const Triangle2 tri = mesh.triangle(i);
    for (int j = 0; j < 3; ++j)
      f << format_double(tri.p[j].x) << ' ' << format_double(tri.p[j].y) << " 0\n";
  }
  f << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (int i = 0; i < nt; ++i)
    f << "3 " << 3 * i << ' ' << 3 * i + 1 << ' ' << 3 * i + 2 << '\n';
  f << "CELL_TYPES " << nt << '\n';
  for (int i = 0; i < nt; ++i) f << "5\n";
  f << "POINT_DATA " << 3 * nt << '\n';
  f << "SCALARS u double 1\n";
  f << "LOOKUP_TABLE default\n";
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < 3; ++j) f << format_double(u(i, j)) << '\n';
  if (!f.good()) throw std::runtime_error("failed writing " + path);
}

VtkSnapshot read_vtk(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  VtkSnapshot snap;
  std::string tok;
  while (f >> tok) {
    if (tok == "POINTS") {
      int n;
      std::string type;
      f >> n >> type;
      snap.points.resize(n);
      for (int i = 0; i < n; ++i) {
        double z;
        f >> snap.points[i].x >> snap.points[i].y >> z;
      }
    } else if (tok == "CELLS") {
      int n, total;
      f >> n >> total;
      snap.cells.resize(n);
      for (int i = 0; i < n; ++i) {
        int c;
        f >> c >> snap.cells[i][0] >> snap.cells[i][1] >> snap.cells[i][2];
      }
    } else if (tok == "LOOKUP_TABLE") {
      f >> tok;  // table name
      snap.values.resize(snap.points.size());
      for (double& v : snap.values) f >> v;
    }
  }
  return snap;
}

}  // namespace amot

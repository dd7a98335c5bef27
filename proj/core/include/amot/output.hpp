#pragma once

#include <string>
#include <vector>

#include "amot/dgspace.hpp"
#include "amot/driver.hpp"

namespace amot {

/// Streams run artifacts into a directory: steps.csv (one row per accepted
/// step), legacy ASCII VTK snapshots with per-cell triplicated points, and a
/// plain-text run summary. The directory is created and steps.csv opened up
/// front so an unwritable target fails before the run starts.
class RunWriter {
 public:
  RunWriter() = default;
  explicit RunWriter(std::string dir);

  bool active() const { return !dir_.empty(); }
  void append_record(const StepRecord& rec);
  void write_snapshot(int k, const DgFunction& u);
  void write_summary(const RunResult& result, const Experiment& experiment, RunMode mode);
  void close();

 private:
  std::string dir_;
  std::string csv_path_;
};

/// steps.csv with the fixed header
/// k,t,tau,dofs,eps_T,eps_S,eta,rejects_T,rejects_S,wall_ms.
void write_steps_csv(const std::vector<StepRecord>& records, const std::string& path);

/// Legacy ASCII VTK unstructured grid: 3 points per triangle (discontinuous
/// point data "u"), cells of type 5.
void write_vtk(const DgFunction& u, const std::string& path);

/// Reads a file written by write_vtk back into points/values (test support &
/// snapshot inspection).
struct VtkSnapshot {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> cells;
  std::vector<double> values;
};
VtkSnapshot read_vtk(const std::string& path);

/// Locale-independent shortest-or-12-digit decimal formatting used by every
/// writer (deterministic across runs).
std::string format_double(double v);

}  // namespace amot

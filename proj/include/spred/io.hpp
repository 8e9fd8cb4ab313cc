#pragma once

#include <iosfwd>
#include <string>

#include "spred/common.hpp"
#include "spred/lti.hpp"
#include "spred/reduction.hpp"

namespace spred {

// System file: JSON object with N, J, O, B, C, D, F, x0 and a
// "parametrization" object {tag, P, offset?, entries?}. Matrices are arrays
// of rows. The "full" tag needs no entries.
std::string system_to_json(const ControlSystem& system);
ControlSystem system_from_json(const std::string& text);
void save_system(const std::string& path, const ControlSystem& system);
ControlSystem load_system(const std::string& path);

// Header t,x_1..x_N,y_1..y_O.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

struct OutputSeries {
  Vector times;
  Matrix outputs;  // (K+1) x O
};

// Reads the t column and every y_* column of a CSV with a header row.
OutputSeries read_outputs_csv(const std::string& path);
void write_outputs_csv(const std::string& path, const Vector& times,
                       const Matrix& outputs);

// Projection pair file:
//   spred-projection 1
//   V <rows> <cols>
//   one line per column, values separated by spaces
//   P <rows> <cols>
//   ...
void save_projection(const std::string& path, const ProjectionPair& pair);
ProjectionPair load_projection(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& M);

// iter,objective,dim_P,dim_V,full_sims,wall_ms
void write_trace_csv(std::ostream& out, const ReductionTrace& trace);
void write_trace_csv(const std::string& path, const ReductionTrace& trace);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace spred

#pragma once
// Trajectory CSV format: header `t,s1,...,sd,a,y`, one row per time point.
// Consecutive rows chain into observations (row i supplies the state,
// action, and reward; row i+1 supplies the next state), so a file with N
// data rows reconstructs N-1 observations. The final row's action and
// reward cells are placeholders kept only so every row parses alike.

#include <string>
#include <vector>

#include "seqab/estimator.hpp"

namespace seqab {

struct Trajectory {
  int state_dim = 0;
  std::vector<Observation> observations;
};

// Serialize a chained trajectory (consecutive time indices, each
// observation's next state equal to the following observation's state).
// Values carry 17 significant digits so doubles round-trip exactly.
// An empty trajectory serializes to the header alone.
std::string write_trajectory_csv(const std::vector<Observation>& observations,
                                 int state_dim);
void write_trajectory_csv_file(const std::string& path,
                               const std::vector<Observation>& observations,
                               int state_dim);

// Parse; malformed input raises std::invalid_argument naming the line.
Trajectory read_trajectory_csv(const std::string& text);
Trajectory read_trajectory_csv_file(const std::string& path);

}  // namespace seqab

#include "seqab/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqab {

namespace {

std::string header_for(int state_dim) {
  std::string h = "t";
  for (int i = 1; i <= state_dim; ++i) h += ",s" + std::to_string(i);
  h += ",a,y";
  return h;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail_line(size_t line_no, const std::string& what) {
  throw std::invalid_argument("trajectory csv: line " +
                              std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& field, size_t line_no) {
  if (field.empty()) fail_line(line_no, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE)
    fail_line(line_no, "bad number '" + field + "'");
  return v;
}

long long parse_int(const std::string& field, size_t line_no) {
  if (field.empty()) fail_line(line_no, "empty integer field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || errno == ERANGE)
    fail_line(line_no, "bad integer '" + field + "'");
  return v;
}

}  // namespace

std::string write_trajectory_csv(const std::vector<Observation>& observations,
                                 int state_dim) {
  if (state_dim < 1)
    throw std::invalid_argument("trajectory csv: state_dim must be >= 1");
  std::string out = header_for(state_dim) + "\n";
  if (observations.empty()) return out;

  char buf[64];
  auto append_row = [&](std::int64_t t, const Eigen::VectorXd& s, int a,
                        double y) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(t));
    out += buf;
    for (int i = 0; i < state_dim; ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", s(i));
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%d,%.17g", a, y);
    out += buf;
    out += '\n';
  };

  for (size_t i = 0; i < observations.size(); ++i) {
    const Observation& obs = observations[i];
    if (obs.s.size() != state_dim || obs.s_next.size() != state_dim)
      throw std::invalid_argument(
          "trajectory csv: observation state dimension mismatch");
    if (i > 0) {
      const Observation& prev = observations[i - 1];
      if (obs.t != prev.t + 1 ||
          !(obs.s.array() == prev.s_next.array()).all())
        throw std::invalid_argument(
            "trajectory csv: observations do not chain into one trajectory");
    }
    append_row(obs.t, obs.s, obs.a, obs.y);
  }
  // Terminal state row; its action/reward cells are placeholders.
  const Observation& last = observations.back();
  append_row(last.t + 1, last.s_next, 0, 0.0);
  return out;
}

void write_trajectory_csv_file(const std::string& path,
                               const std::vector<Observation>& observations,
                               int state_dim) {
  const std::string text = write_trajectory_csv(observations, state_dim);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

Trajectory read_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;

  if (!std::getline(in, line))
    throw std::invalid_argument("trajectory csv: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Infer the state dimension from the header, then demand an exact match.
  const auto head = split_fields(line);
  if (head.size() < 4)
    fail_line(line_no, "header must be t,s1,...,sd,a,y");
  const int state_dim = static_cast<int>(head.size()) - 3;
  if (line != header_for(state_dim))
    fail_line(line_no, "header must be t,s1,...,sd,a,y");

  Trajectory traj;
  traj.state_dim = state_dim;
  struct Row {
    std::int64_t t;
    Eigen::VectorXd s;
    int a;
    double y;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail_line(line_no, "blank row");
    const auto fields = split_fields(line);
    if (fields.size() != static_cast<size_t>(state_dim) + 3)
      fail_line(line_no, "expected " + std::to_string(state_dim + 3) +
                             " fields, got " + std::to_string(fields.size()));
    Row row;
    row.t = parse_int(fields[0], line_no);
    row.s = Eigen::VectorXd(state_dim);
    for (int i = 0; i < state_dim; ++i)
      row.s(i) = parse_double(fields[static_cast<size_t>(i) + 1], line_no);
    const long long a = parse_int(fields[static_cast<size_t>(state_dim) + 1], line_no);
    if (a != 0 && a != 1) fail_line(line_no, "action must be 0 or 1");
    row.a = static_cast<int>(a);
    row.y = parse_double(fields[static_cast<size_t>(state_dim) + 2], line_no);
    if (!rows.empty() && row.t != rows.back().t + 1)
      fail_line(line_no, "time index must increase by 1 per row");
    rows.push_back(std::move(row));
  }

  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    Observation obs;
    obs.t = rows[i].t;
    obs.s = rows[i].s;
    obs.a = rows[i].a;
    obs.y = rows[i].y;
    obs.s_next = rows[i + 1].s;
    traj.observations.push_back(std::move(obs));
  }
  return traj;
}

Trajectory read_trajectory_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return read_trajectory_csv(ss.str());
}

}  // namespace seqab

#include "spred/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace spred {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix matrix_from(const json& j, Index rows, Index cols, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw ParseError(std::string("system file: ") + name + " must have " +
                     std::to_string(rows) + " rows");
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ParseError(std::string("system file: ") + name + " row " +
                       std::to_string(r) + " must have " +
                       std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c)
      M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

Vector vector_from(const json& j, Index n, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n)
    throw ParseError(std::string("system file: ") + name + " must have " +
                     std::to_string(n) + " entries");
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    parts.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return parts;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + where);
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string system_to_json(const ControlSystem& s) {
  json j;
  j["format"] = "spred-system";
  j["version"] = 1;
  j["N"] = s.N();
  j["J"] = s.J();
  j["O"] = s.O();
  const auto& param = s.parametrization;
  json pj;
  pj["tag"] = param.tag();
  pj["P"] = param.param_dim();
  if (param.tag() != "full") {
    if (param.has_offset()) pj["offset"] = matrix_json(param.offset());
    json entries = json::array();
    for (const auto& e : param.entries())
      entries.push_back({e.param, e.row, e.col, e.coef});
    pj["entries"] = std::move(entries);
  }
  j["parametrization"] = std::move(pj);
  j["B"] = matrix_json(s.B);
  j["C"] = matrix_json(s.C);
  j["D"] = matrix_json(s.D);
  j["F"] = vector_json(s.F);
  j["x0"] = vector_json(s.x0);
  return j.dump(1);
}

ControlSystem system_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("system file is not valid JSON: ") + e.what());
  }
  try {
    const Index N = j.at("N").get<Index>();
    const Index J = j.at("J").get<Index>();
    const Index O = j.at("O").get<Index>();
    if (N < 1 || J < 0 || O < 0) throw ParseError("system file: bad sizes");
    const json& pj = j.at("parametrization");
    const std::string tag = pj.at("tag").get<std::string>();
    Parametrization param;
    if (tag == "full") {
      param = Parametrization::full(N);
    } else {
      const Index P = pj.at("P").get<Index>();
      Matrix offset = pj.contains("offset")
                          ? matrix_from(pj["offset"], N, N, "offset")
                          : Matrix();
      std::vector<Parametrization::Entry> entries;
      for (const auto& e : pj.at("entries")) {
        if (!e.is_array() || e.size() != 4)
          throw ParseError("system file: entries are [param, row, col, coef]");
        entries.push_back({e[0].get<Index>(), e[1].get<Index>(),
                           e[2].get<Index>(), e[3].get<double>()});
      }
      param = Parametrization(N, P, std::move(offset), std::move(entries), tag);
    }
    return ControlSystem(std::move(param), matrix_from(j.at("B"), N, J, "B"),
                         matrix_from(j.at("C"), O, N, "C"),
                         matrix_from(j.at("D"), O, J, "D"),
                         vector_from(j.at("F"), N, "F"),
                         vector_from(j.at("x0"), N, "x0"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("system file: ") + e.what());
  }
}

void save_system(const std::string& path, const ControlSystem& system) {
  open_out(path) << system_to_json(system) << "\n";
}

ControlSystem load_system(const std::string& path) {
  return system_from_json(read_file(path));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (Index i = 0; i < traj.states.cols(); ++i) out << ",x_" << i + 1;
  for (Index i = 0; i < traj.outputs.cols(); ++i) out << ",y_" << i + 1;
  out << "\n";
  for (Index k = 0; k < traj.times.size(); ++k) {
    out << format_double(traj.times[k]);
    for (Index i = 0; i < traj.states.cols(); ++i)
      out << "," << format_double(traj.states(k, i));
    for (Index i = 0; i < traj.outputs.cols(); ++i)
      out << "," << format_double(traj.outputs(k, i));
    out << "\n";
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory_csv(out, traj);
}

OutputSeries read_outputs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + " is empty");
  const auto header = split(line, ',');
  Index t_col = -1;
  std::vector<std::size_t> y_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "t") t_col = static_cast<Index>(i);
    if (header[i].rfind("y_", 0) == 0) y_cols.push_back(i);
  }
  if (y_cols.empty()) throw ParseError(path + " has no y_* columns");

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": wrong number of columns");
    const std::string where = path + ":" + std::to_string(line_no);
    if (t_col >= 0)
      times.push_back(parse_number(cells[static_cast<std::size_t>(t_col)], where));
    std::vector<double> row;
    for (auto c : y_cols) row.push_back(parse_number(cells[c], where));
    rows.push_back(std::move(row));
  }
  OutputSeries out;
  out.outputs.resize(static_cast<Index>(rows.size()),
                     static_cast<Index>(y_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < y_cols.size(); ++c)
      out.outputs(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  out.times = Eigen::Map<Vector>(times.data(), static_cast<Index>(times.size()));
  return out;
}

void write_outputs_csv(const std::string& path, const Vector& times,
                       const Matrix& outputs) {
  auto out = open_out(path);
  out << "t";
  for (Index i = 0; i < outputs.cols(); ++i) out << ",y_" << i + 1;
  out << "\n";
  for (Index k = 0; k < outputs.rows(); ++k) {
    out << format_double(times[k]);
    for (Index i = 0; i < outputs.cols(); ++i)
      out << "," << format_double(outputs(k, i));
    out << "\n";
  }
}

namespace {

void write_block(std::ostream& out, const char* name, const Matrix& M) {
  out << name << " " << M.rows() << " " << M.cols() << "\n";
  for (Index c = 0; c < M.cols(); ++c) {
    for (Index r = 0; r < M.rows(); ++r)
      out << (r ? " " : "") << format_double(M(r, c));
    out << "\n";
  }
}

Matrix read_block(std::istream& in, const std::string& name,
                  const std::string& path) {
  std::string tag;
  Index rows = -1, cols = -1;
  if (!(in >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0)
    throw ParseError(path + ": expected '" + name + " <rows> <cols>'");
  Matrix M(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) {
      std::string tok;
      if (!(in >> tok)) throw ParseError(path + ": truncated " + name);
      M(r, c) = parse_number(tok, path);
    }
  return M;
}

}  // namespace

void save_projection(const std::string& path, const ProjectionPair& pair) {
  auto out = open_out(path);
  out << "spred-projection 1\n";
  write_block(out, "V", pair.V);
  write_block(out, "P", pair.P);
}

ProjectionPair load_projection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "spred-projection" || version != 1)
    throw ParseError(path + " is not a projection pair file");
  ProjectionPair pair;
  pair.V = read_block(in, "V", path);
  pair.P = read_block(in, "P", path);
  return pair;
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
  auto out = open_out(path);
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c)
      out << (c ? "," : "") << format_double(M(r, c));
    out << "\n";
  }
}

void write_trace_csv(std::ostream& out, const ReductionTrace& trace) {
  out << "iter,objective,dim_P,dim_V,full_sims,wall_ms\n";
  for (const auto& r : trace.iterations)
    out << r.iter << "," << format_double(r.objective) << "," << r.dim_P << ","
        << r.dim_V << "," << r.full_sims << "," << format_double(r.wall_ms)
        << "\n";
}

void write_trace_csv(const std::string& path, const ReductionTrace& trace) {
  auto out = open_out(path);
  write_trace_csv(out, trace);
}

}  // namespace spred

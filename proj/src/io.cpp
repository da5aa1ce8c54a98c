#include "cpcp/io.hpp"

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cpcp::io {

namespace {

using json = nlohmann::json;

std::string format17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& tok) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataError("not a number: '" + tok + "'");
  return v;
}

Index parse_index(const std::string& tok) {
  long long v = 0;
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), last, v);
  if (ec != std::errc() || ptr != last || v <= 0) throw DataError("not a positive integer: '" + tok + "'");
  return static_cast<Index>(v);
}

std::string next_token(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw DataError(std::string("unexpected end of input while reading ") + what);
  return tok;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  return is;
}

void write_matrix_rows(std::ostream& os, const MatrixXd& X) {
  for (Index r = 0; r < X.rows(); ++r) {
    for (Index c = 0; c < X.cols(); ++c) {
      if (c) os << ' ';
      os << format17(X(r, c));
    }
    os << '\n';
  }
}

MatrixXd read_matrix_rows(std::istream& is, Index rows, Index cols) {
  MatrixXd X(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) X(r, c) = parse_double(next_token(is, "factor entries"));
  if (!X.allFinite()) throw DataError("factors: non-finite value");
  return X;
}

json matrix_json(const MatrixXd& X) {
  json rows = json::array();
  for (Index r = 0; r < X.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < X.cols(); ++c) row.push_back(X(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
  MatrixXd X(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j.at(r).size()) != cols) throw DataError("history: ragged matrix");
    for (Index c = 0; c < cols; ++c) X(r, c) = j.at(r).at(c).get<double>();
  }
  return X;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double x) { return json(x).dump(); }

void write_tensor(std::ostream& os, const Tensor3d& T) {
  os << "tensor3 " << T.I() << ' ' << T.J() << ' ' << T.K() << '\n';
  const auto& d = T.data();
  // One mode-1 fiber per line.
  for (Index s = 0; s < d.size(); s += T.I()) {
    for (Index i = 0; i < T.I(); ++i) {
      if (i) os << ' ';
      os << format17(d[s + i]);
    }
    os << '\n';
  }
}

Tensor3d read_tensor(std::istream& is) {
  if (next_token(is, "tensor header") != "tensor3") throw DataError("tensor: expected header 'tensor3 I J K'");
  const Index I = parse_index(next_token(is, "I"));
  const Index J = parse_index(next_token(is, "J"));
  const Index K = parse_index(next_token(is, "K"));
  VectorXd values(I * J * K);
  for (Index n = 0; n < values.size(); ++n) values[n] = parse_double(next_token(is, "tensor values"));
  std::string extra;
  if (is >> extra) throw DataError("tensor: trailing data after " + std::to_string(values.size()) + " values");
  return Tensor3d(I, J, K, std::move(values));
}

void write_tensor(const std::filesystem::path& path, const Tensor3d& T) {
  auto os = open_out(path);
  write_tensor(os, T);
}

Tensor3d read_tensor(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_tensor(is);
}

void write_factors(std::ostream& os, const FactorSetd& F) {
  F.validate();
  os << "factors " << F.A.rows() << ' ' << F.B.rows() << ' ' << F.C.rows() << ' ' << F.rank() << '\n';
  write_matrix_rows(os, F.A);
  os << '\n';
  write_matrix_rows(os, F.B);
  os << '\n';
  write_matrix_rows(os, F.C);
}

FactorSetd read_factors(std::istream& is) {
  if (next_token(is, "factor header") != "factors") throw DataError("factors: expected header 'factors I J K R'");
  const Index I = parse_index(next_token(is, "I"));
  const Index J = parse_index(next_token(is, "J"));
  const Index K = parse_index(next_token(is, "K"));
  const Index R = parse_index(next_token(is, "R"));
  FactorSetd F;
  F.A = read_matrix_rows(is, I, R);
  F.B = read_matrix_rows(is, J, R);
  F.C = read_matrix_rows(is, K, R);
  std::string extra;
  if (is >> extra) throw DataError("factors: trailing data");
  return F;
}

void write_factors(const std::filesystem::path& path, const FactorSetd& F) {
  auto os = open_out(path);
  write_factors(os, F);
}

FactorSetd read_factors(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_factors(is);
}

void write_trace(std::ostream& os, const ConvergenceTrace<double>& trace, bool include_time) {
  for (const auto& rec : trace.records) {
    json j;
    j["iter"] = rec.iter;
    j["objective"] = rec.objective;
    j["jred"] = rec.jred;
    j["sigma_min"] = {rec.sigma_min[0], rec.sigma_min[1], rec.sigma_min[2]};
    j["kr_rank"] = {rec.kr_rank[0], rec.kr_rank[1], rec.kr_rank[2]};
    j["wall_ms"] = include_time ? rec.wall_ms : 0.0;
    j["alpha"] = rec.alpha;
    j["step"] = rec.step;
    j["flags"] = {{"degenerate", rec.flags.degenerate}, {"stall", rec.flags.stall}, {"extrapolated", rec.flags.extrapolated}};
    os << j.dump() << '\n';
  }
}

ConvergenceTrace<double> read_trace(std::istream& is) {
  ConvergenceTrace<double> trace;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      TraceRecord<double> rec;
      rec.iter = j.at("iter").get<int>();
      rec.objective = j.at("objective").get<double>();
      rec.jred = j.at("jred").get<double>();
      for (std::size_t m = 0; m < 3; ++m) {
        rec.sigma_min[m] = j.at("sigma_min").at(m).get<double>();
        rec.kr_rank[m] = j.at("kr_rank").at(m).get<Index>();
      }
      rec.wall_ms = j.at("wall_ms").get<double>();
      rec.alpha = j.at("alpha").get<double>();
      rec.step = j.at("step").get<double>();
      rec.flags.degenerate = j.at("flags").at("degenerate").get<bool>();
      rec.flags.stall = j.at("flags").at("stall").get<bool>();
      rec.flags.extrapolated = j.at("flags").at("extrapolated").get<bool>();
      trace.records.push_back(rec);
    } catch (const json::exception& e) {
      throw DataError(std::string("trace: ") + e.what());
    }
  }
  return trace;
}

void write_history(std::ostream& os, const History& history) {
  if (history.iterates.size() != history.objectives.size()) throw std::invalid_argument("history: size mismatch");
  for (std::size_t k = 0; k < history.iterates.size(); ++k) {
    const auto& F = history.iterates[k];
    json j;
    j["iter"] = k;
    j["objective"] = history.objectives[k];
    j["A"] = matrix_json(F.A);
    j["B"] = matrix_json(F.B);
    j["C"] = matrix_json(F.C);
    os << j.dump() << '\n';
  }
}

History read_history(std::istream& is) {
  History h;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("iter").get<std::size_t>() != expected) throw DataError("history: iterations out of order");
      ++expected;
      FactorSetd F{matrix_from_json(j.at("A")), matrix_from_json(j.at("B")), matrix_from_json(j.at("C"))};
      F.validate();
      h.iterates.push_back(std::move(F));
      h.objectives.push_back(j.at("objective").get<double>());
    } catch (const json::exception& e) {
      throw DataError(std::string("history: ") + e.what());
    }
  }
  return h;
}

History read_history(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_history(is);
}

void write_swamp_report(std::ostream& os, const SwampReport<double>& report) {
  for (const auto& row : report.rows) {
    json j;
    j["iter"] = row.iter;
    j["objective"] = row.objective;
    j["stall"] = row.stall;
    j["subspace_distance"] = {row.subspace_distance[0], row.subspace_distance[1], row.subspace_distance[2]};
    j["condition"] = {finite_or_null(row.condition[0]), finite_or_null(row.condition[1]), finite_or_null(row.condition[2])};
    if (row.reference_distance) {
      const auto& d = *row.reference_distance;
      j["reference_distance"] = {d[0], d[1], d[2]};
    }
    os << j.dump() << '\n';
  }
}

std::map<std::string, std::string> read_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

Method parse_method(const std::string& s) {
  if (s == "als") return Method::als;
  if (s == "rals") return Method::rals;
  if (s == "lsals") return Method::lsals;
  throw std::invalid_argument("unknown method '" + s + "' (expected als, rals or lsals)");
}

InitKind parse_init(const std::string& s) {
  if (s == "random") return InitKind::random;
  if (s == "centroid") return InitKind::centroid;
  if (s == "centroid_symmetric") return InitKind::centroid_symmetric;
  throw std::invalid_argument("unknown init '" + s + "' (expected random, centroid or centroid_symmetric)");
}

void apply_config(SolverConfig& cfg, const std::map<std::string, std::string>& kv) {
  auto number = [](const std::string& key, const std::string& v) {
    try {
      return parse_double(v);
    } catch (const DataError&) {
      throw std::invalid_argument("config: " + key + " is not a number: '" + v + "'");
    }
  };
  auto integer = [&](const std::string& key, const std::string& v) {
    const double d = number(key, v);
    if (d != std::floor(d)) throw std::invalid_argument("config: " + key + " must be an integer");
    return static_cast<long long>(d);
  };
  for (const auto& [key, value] : kv) {
    if (key == "method") cfg.method = parse_method(value);
    else if (key == "init") cfg.init = parse_init(value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer(key, value));
    else if (key == "rank") cfg.rank = static_cast<Index>(integer(key, value));
    else if (key == "max_iters") cfg.max_iters = static_cast<int>(integer(key, value));
    else if (key == "tol_residual") cfg.tol_residual = number(key, value);
    else if (key == "tol_stall") cfg.tol_stall = number(key, value);
    else if (key == "rals_alpha0") cfg.rals_alpha0 = number(key, value);
    else if (key == "rals_decay") cfg.rals_decay = number(key, value);
    else if (key == "rals_alpha_floor") cfg.rals_alpha_floor = number(key, value);
    else if (key == "ls_interval") cfg.ls_interval = static_cast<int>(integer(key, value));
    else if (key == "symmetric") {
      if (value == "true" || value == "1") cfg.symmetric = true;
      else if (value == "false" || value == "0") cfg.symmetric = false;
      else throw std::invalid_argument("config: symmetric must be true or false");
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

SolverConfig read_config(const std::filesystem::path& path, SolverConfig base) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config: " + path.string());
  apply_config(base, read_key_values(is));
  return base;
}

}  // namespace cpcp::io

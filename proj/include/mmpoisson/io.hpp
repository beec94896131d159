#pragma once

// File formats: JSON model configs and reports, CSV count matrices and tables.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmpoisson/asymptotics.hpp"
#include "mmpoisson/error.hpp"
#include "mmpoisson/isotonic.hpp"
#include "mmpoisson/model.hpp"
#include "mmpoisson/ramanujan.hpp"
#include "mmpoisson/simulator.hpp"

namespace mmpoisson::io {

using nlohmann::json;

/// Model configuration file:
///   { "s": 2, "q": [0.6, 0.4], "p": [0.7, 0.3], "lambda_t": 1000, "n": 10000, "k": 3 }
/// `q`/`p` may be omitted when only estimating from data; `k` defaults to
/// 2s - 1. Any other members are kept in `extra` for the study driver.
struct ModelConfig {
  std::size_t s = 0;
  std::optional<ModelParams> model;
  BeamConfig beam;
  json extra = json::object();
};

namespace detail {

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("config is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace detail

inline ModelConfig parse_model_config(const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  ModelConfig cfg;
  const auto s = detail::required<std::int64_t>(j, "s");
  if (s < 1) throw ValidationError("s must be at least 1");
  cfg.s = static_cast<std::size_t>(s);
  cfg.beam.lambda_t = detail::required<double>(j, "lambda_t");
  if (!(cfg.beam.lambda_t > 0)) throw ValidationError("lambda_t must be positive");
  const auto n = j.contains("n") ? detail::required<std::int64_t>(j, "n") : 1;
  if (n < 1) throw ValidationError("n must be at least 1");
  cfg.beam.n = static_cast<std::size_t>(n);
  const auto k = j.contains("k") ? detail::required<std::int64_t>(j, "k")
                                 : static_cast<std::int64_t>(2 * cfg.s - 1);
  if (k < 1) throw ValidationError("k must be at least 1");
  cfg.beam.k = static_cast<std::size_t>(k);

  if (j.contains("q") || j.contains("p")) {
    auto q = detail::required<std::vector<double>>(j, "q");
    auto p = detail::required<std::vector<double>>(j, "p");
    if (q.size() != cfg.s || p.size() != cfg.s)
      throw DimensionError("q and p must both have s = " + std::to_string(cfg.s) + " entries");
    cfg.model = ModelParams::make(std::move(q), std::move(p));
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "s" && key != "q" && key != "p" && key != "lambda_t" && key != "n" && key != "k")
      cfg.extra[key] = value;
  }
  return cfg;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline ModelConfig load_model_config(const std::filesystem::path& path) {
  return parse_model_config(read_json_file(path));
}

inline json to_json(const ModelConfig& cfg) {
  json j = cfg.extra;
  j["s"] = cfg.s;
  j["lambda_t"] = cfg.beam.lambda_t;
  j["n"] = cfg.beam.n;
  j["k"] = cfg.beam.k;
  if (cfg.model) {
    j["q"] = std::vector<double>(cfg.model->q().begin(), cfg.model->q().end());
    j["p"] = std::vector<double>(cfg.model->p().begin(), cfg.model->p().end());
  }
  return j;
}

/// Row-major matrix with explicit dimensions.
inline json to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError("matrix data length does not match rows * cols");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
  return m;
}

inline json to_json(const SufficientStats& stats) {
  return json{{"b_hat", stats.b_hat}, {"a_hat", stats.a_hat}};
}

inline json to_json(const SolverDiagnostics& d) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"det_C", finite_or_null(d.det_C)},
              {"cond_C", finite_or_null(d.cond_C)},
              {"max_imag_discarded", d.max_imag_discarded},
              {"root_separation", finite_or_null(d.root_separation)}};
}

inline json to_json(const MomentSolution& sol) {
  return json{{"q", sol.y},
              {"p", sol.z},
              {"feasible", sol.feasible},
              {"clamped", sol.clamped},
              {"diagnostics", to_json(sol.diagnostics)}};
}

inline json to_json(const CovarianceReport& report) {
  return json{{"lambda_t", report.lambda_t},
              {"sigma_sq", to_json(report.sigma_sq)},
              {"sigma_A", to_json(report.sigma_A)},
              {"dpsi", to_json(report.dpsi)}};
}

inline json to_json(const FlatPartition& part) {
  json out = json::array();
  for (std::size_t j = 0; j < part.region_count; ++j)
    out.push_back({{"start", part.starts[j]}, {"length", part.lengths[j]}});
  return out;
}

inline FlatPartition partition_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("partition must be a JSON array");
  FlatPartition part;
  for (const auto& region : j) {
    part.starts.push_back(region.at("start").get<std::size_t>());
    part.lengths.push_back(region.at("length").get<std::size_t>());
  }
  part.region_count = part.starts.size();
  part.validate(part.size());
  return part;
}

inline json to_json(const std::vector<WaldInterval>& intervals, std::size_t s) {
  json out = json::array();
  for (std::size_t c = 0; c < intervals.size(); ++c) {
    const auto& w = intervals[c];
    const std::string name = (c < s ? "q_" : "p_") + std::to_string((c < s ? c : c - s) + 1);
    out.push_back({{"parameter", name},
                   {"estimate", w.estimate},
                   {"lower", w.lower},
                   {"upper", w.upper},
                   {"std_error", w.std_error}});
  }
  return out;
}

/// Machine-readable error document emitted by the CLI.
inline json error_json(const Error& e) {
  json detail = json::object();
  if (const auto* h = dynamic_cast<const SingularHankel*>(&e)) {
    detail["det_C"] = h->det();
    detail["cond_C"] = std::isfinite(h->cond()) ? json(h->cond()) : json(nullptr);
  } else if (const auto* c = dynamic_cast<const ComplexRoots*>(&e)) {
    detail["max_imag"] = c->max_imag();
  } else if (const auto* g = dynamic_cast<const IllSeparatedNodes*>(&e)) {
    detail["min_gap"] = g->min_gap();
  }
  return json{{"error",
               {{"kind", std::string(to_string(e.kind()))},
                {"message", e.what()},
                {"exit_code", exit_code(e.kind())},
                {"detail", detail}}}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Header `rep,layer_1,...,layer_k`, one row per replication, reps 1-based.
inline void write_counts_csv(std::ostream& out, const CountMatrix& data) {
  out << "rep";
  for (std::size_t i = 0; i < data.layers(); ++i) out << ",layer_" << i + 1;
  out << '\n';
  for (std::size_t j = 0; j < data.replications(); ++j) {
    out << j + 1;
    for (Count x : data.replication(j)) out << ',' << x;
    out << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class T>
T parse_number(const std::string& cell, std::size_t line_no) {
  std::istringstream is(cell);
  T value{};
  is >> value;
  if (!is || !is.eof())
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
  return value;
}

}  // namespace detail

/// Reads a count matrix written by write_counts_csv. lambda_t is not part of
/// the CSV and must come from the model config.
inline CountMatrix read_counts_csv(std::istream& in, double lambda_t) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("count CSV is empty");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "rep")
    throw ParseError("count CSV header must start with 'rep,layer_1'");
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "layer_" + std::to_string(i))
      throw ParseError("unexpected column '" + header[i] + "' in count CSV header");

  CountMatrix data;
  data.config.k = header.size() - 1;
  data.config.lambda_t = lambda_t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " columns");
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto x = detail::parse_number<Count>(cells[i], line_no);
      if (x < 0) throw ParseError("line " + std::to_string(line_no) + ": negative count");
      data.counts.push_back(x);
    }
    ++data.config.n;
  }
  if (data.config.n == 0) throw ParseError("count CSV has no data rows");
  return data;
}

inline CountMatrix read_counts_csv(const std::filesystem::path& path, double lambda_t) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_counts_csv(in, lambda_t);
}

/// Generic numeric table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  friend bool operator==(const Table&, const Table&) = default;
};

inline void write_table(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c)
    out << (c ? "," : "") << table.header[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

inline Table read_table(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("table is empty");
  table.header = detail::split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != table.header.size())
      throw ParseError("line " + std::to_string(line_no) + ": column count mismatch");
    std::vector<double> row;
    for (const auto& cell : cells) {
      if (cell == "nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      row.push_back(detail::parse_number<double>(cell, line_no));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Sample matrix as CSV: `rep,comp_1,...,comp_s`.
inline Table sample_table(const Eigen::MatrixXd& samples) {
  Table t;
  t.header.push_back("rep");
  for (Eigen::Index c = 0; c < samples.cols(); ++c) t.header.push_back("comp_" + std::to_string(c + 1));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    std::vector<double> row{static_cast<double>(i + 1)};
    for (Eigen::Index c = 0; c < samples.cols(); ++c) row.push_back(samples(i, c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_table_file(const std::filesystem::path& path, const Table& table) {
  std::ostringstream os;
  write_table(os, table);
  write_text_file(path, os.str());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace mmpoisson::io

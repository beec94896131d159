// mmpoisson: simulate counts, estimate mode parameters, run Monte Carlo
// studies and project vectors onto decreasing order.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmpoisson/mmpoisson.hpp"

namespace fs = std::filesystem;
using namespace mmpoisson;
using io::json;

namespace {

struct CommonOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::string mode = "direct";
  bool clamp_infeasible = false;
  double level = 0.95;
  std::string out;
  unsigned threads = 1;
};

struct EstimateOptionsCli {
  std::string data;
};

struct StudyOptionsCli {
  std::optional<std::size_t> replications;
  std::vector<std::size_t> n_grid;
};

struct IsotonicOptionsCli {
  std::string values;
  std::string input;
  std::vector<double> truth;
  double tol = 1e-12;
};

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ValidationError("--out is required for this command");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
  return fs::path(out);
}

io::ModelConfig require_config(const CommonOptions& opt) {
  if (opt.config.empty()) throw ValidationError("--config is required");
  return io::load_model_config(opt.config);
}

const ModelParams& require_model(const io::ModelConfig& cfg) {
  if (!cfg.model) throw ValidationError("config must provide q and p for this command");
  return *cfg.model;
}

/// Per-layer sample mean and variance with their standard errors.
json layer_summary(const CountMatrix& data) {
  json layers = json::array();
  const double n = static_cast<double>(data.replications());
  for (std::size_t i = 0; i < data.layers(); ++i) {
    std::vector<double> x(data.replications());
    for (std::size_t j = 0; j < data.replications(); ++j)
      x[j] = static_cast<double>(data.at(j, i));
    const double var = stats::variance(x);
    const double m4 = stats::central_moment(x, 4);
    const double m2 = stats::central_moment(x, 2);
    layers.push_back({{"layer", i + 1},
                      {"mean", stats::mean(x)},
                      {"mean_se", std::sqrt(var / n)},
                      {"variance", var},
                      {"variance_se", std::sqrt(std::max(0.0, m4 - m2 * m2) / n)}});
  }
  return layers;
}

int cmd_simulate(const CommonOptions& opt) {
  const auto cfg = require_config(opt);
  const auto& model = require_model(cfg);
  const auto mode = parse_mode(opt.mode);
  const auto dir = prepare_out_dir(opt.out);
  const auto data = simulate(mode, model, cfg.beam, RngSeed{opt.seed, 0}, opt.threads);

  std::ostringstream csv;
  io::write_counts_csv(csv, data);
  io::write_text_file(dir / "counts.csv", csv.str());

  json sidecar{{"config", io::to_json(cfg)},
               {"seed", opt.seed},
               {"mode", opt.mode},
               {"n", data.replications()},
               {"k", data.layers()},
               {"sufficient_stats", io::to_json(sufficient_stats(data))},
               {"layers", layer_summary(data)},
               {"expected_layer_means", [&] {
                  auto m = forward_moments(model, cfg.beam.k).m;
                  for (auto& v : m) v *= cfg.beam.lambda_t;
                  return m;
                }()}};
  io::write_json_file(dir / "stats.json", sidecar);
  std::cout << json{{"counts", (dir / "counts.csv").string()},
                    {"stats", (dir / "stats.json").string()}}
                   .dump()
            << '\n';
  return 0;
}

json estimate_report_json(const EstimateReport& r, std::size_t s, const SufficientStats& stats) {
  json j{{"s", s},
         {"n", r.n},
         {"lambda_t", r.lambda_t},
         {"sufficient_stats", io::to_json(stats)},
         {"raw_solution", io::to_json(r.raw)},
         {"solution", io::to_json(r.solution)}};
  j["covariance"] = r.covariance ? io::to_json(*r.covariance) : json(nullptr);
  j["level"] = nullptr;
  j["intervals"] = r.intervals.empty() ? json(nullptr) : io::to_json(r.intervals, s);
  // The partition is read off the estimate, not known: a heuristic.
  j["ordered"] = {{"q_star", r.ordered.q_star},
                  {"partition", io::to_json(r.ordered_partition)},
                  {"partition_heuristic", true}};
  return j;
}

int cmd_estimate(const CommonOptions& opt, const EstimateOptionsCli& est) {
  const auto cfg = require_config(opt);
  CountMatrix data;
  std::string source;
  if (!est.data.empty()) {
    data = io::read_counts_csv(est.data, cfg.beam.lambda_t);
    source = est.data;
  } else {
    const auto& model = require_model(cfg);
    data = simulate(parse_mode(opt.mode), model, cfg.beam, RngSeed{opt.seed, 0}, opt.threads);
    source = "simulated";
  }
  if (data.layers() != 2 * cfg.s - 1)
    throw DimensionError("data has k = " + std::to_string(data.layers()) +
                         " layers but s = " + std::to_string(cfg.s) + " needs k = 2s - 1 = " +
                         std::to_string(2 * cfg.s - 1));
  const auto stats = sufficient_stats(data);
  EstimateOptions options;
  options.level = opt.level;
  options.clamp_infeasible = opt.clamp_infeasible;
  const auto report = estimate(stats, cfg.s, data.replications(), cfg.beam.lambda_t, options);

  json j = estimate_report_json(report, cfg.s, stats);
  j["level"] = opt.level;
  j["data_source"] = source;
  if (source == "simulated") {
    j["seed"] = opt.seed;
    j["mode"] = opt.mode;
  }
  if (cfg.model) {
    json truth{{"q", std::vector<double>(cfg.model->q().begin(), cfg.model->q().end())},
               {"p", std::vector<double>(cfg.model->p().begin(), cfg.model->p().end())}};
    if (!report.intervals.empty()) {
      json covered = json::array();
      for (std::size_t c = 0; c < 2 * cfg.s; ++c) {
        const double t = c < cfg.s ? cfg.model->q()[c] : cfg.model->p()[c - cfg.s];
        covered.push_back(report.intervals[c].contains(t));
      }
      truth["covered"] = covered;
    }
    j["truth"] = truth;
  }
  if (!opt.out.empty()) io::write_json_file(prepare_out_dir(opt.out) / "estimate.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_mc_study(const CommonOptions& opt, const StudyOptionsCli& st) {
  const auto cfg = require_config(opt);
  StudyConfig study;
  study.model = require_model(cfg);
  study.beam = cfg.beam;
  study.seed = RngSeed{opt.seed, 0};
  study.mode = parse_mode(opt.mode);
  study.clamp_infeasible = opt.clamp_infeasible;
  study.level = opt.level;
  study.threads = opt.threads;
  study.replications = 1;
  try {
    if (cfg.extra.contains("replications"))
      study.replications = cfg.extra.at("replications").get<std::size_t>();
    if (cfg.extra.contains("n_grid"))
      study.n_grid = cfg.extra.at("n_grid").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config study fields have the wrong type: ") + e.what());
  }
  if (st.replications) study.replications = *st.replications;
  if (!st.n_grid.empty()) study.n_grid = st.n_grid;
  const auto dir = prepare_out_dir(opt.out);

  const auto result = run_study(study);
  io::write_table_file(dir / "consistency.csv", consistency_table(result));
  io::write_table_file(dir / "covariance.csv", covariance_table(result));
  io::write_table_file(dir / "coverage.csv", coverage_table(result));
  io::write_table_file(dir / "normality.csv", normality_table(result));
  io::write_table_file(dir / "isotonic_audit.csv", isotonic_audit_table(result));
  io::write_table_file(dir / "replications.csv", replications_table(result));
  auto summary = summary_json(result);
  summary["replications"] = study.replications;
  io::write_json_file(dir / "summary.json", summary);
  io::write_json_file(dir / "timing.json",
                      json{{"wall_seconds", result.wall_seconds}, {"threads", opt.threads}});
  std::cout << json{{"out", dir.string()}, {"wall_seconds", result.wall_seconds}}.dump() << '\n';
  return 0;
}

std::vector<double> parse_vector_text(const std::string& text) {
  std::string cleaned;
  for (char ch : text) cleaned += (ch == '[' || ch == ']' || ch == '\n' || ch == ';') ? ',' : ch;
  std::vector<double> out;
  std::istringstream is(cleaned);
  std::string cell;
  std::size_t pos = 0;
  while (std::getline(is, cell, ',')) {
    ++pos;
    const auto first = cell.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = cell.find_last_not_of(" \t\r");
    const std::string token = cell.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(v))
      throw ParseError("cannot parse vector entry '" + token + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("vector is empty");
  return out;
}

std::vector<double> load_vector(const IsotonicOptionsCli& iso) {
  if (!iso.values.empty() && !iso.input.empty())
    throw ValidationError("give either --values or --input, not both");
  if (!iso.input.empty()) {
    std::ifstream in(iso.input);
    if (!in) throw IoError("cannot open " + iso.input);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_vector_text(buf.str());
  }
  return parse_vector_text(iso.values);
}

json norms_json(std::span<const double> v) {
  double l1 = 0, l2 = 0, linf = 0;
  for (double x : v) {
    l1 += std::abs(x);
    l2 += x * x;
    linf = std::max(linf, std::abs(x));
  }
  return json{{"l1", l1}, {"l2", std::sqrt(l2)}, {"linf", linf}};
}

std::vector<double> difference(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

int cmd_isotonic(const CommonOptions& opt, const IsotonicOptionsCli& iso) {
  const auto v = load_vector(iso);
  const auto proj = project_decreasing(v);
  const auto part = flat_regions(proj.q_star, iso.tol);
  json j{{"input", v},
         {"projection", proj.q_star},
         {"partition", io::to_json(part)},
         {"region_count", part.region_count},
         {"already_decreasing", is_decreasing(v)},
         {"norms", {{"input", norms_json(v)},
                    {"projection", norms_json(proj.q_star)},
                    {"adjustment", norms_json(difference(proj.q_star, v))}}}};
  if (!iso.truth.empty()) {
    if (iso.truth.size() != v.size())
      throw DimensionError("--truth must have the same length as the vector");
    j["error_vs_truth"] = {{"before", norms_json(difference(v, iso.truth))},
                           {"after", norms_json(difference(proj.q_star, iso.truth))},
                           {"truth_decreasing", is_decreasing(iso.truth)}};
  }
  if (!opt.out.empty()) io::write_json_file(prepare_out_dir(opt.out) / "isotonic.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int report_error(ErrorKind kind, const std::string& message) {
  std::cout << io::error_json(Error(kind, message)).dump() << '\n';
  return exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimode Poisson thinning: simulation, estimation and Monte Carlo studies"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions opt;
  app.add_option("--config", opt.config, "JSON model config");
  app.add_option("--seed", opt.seed, "Base RNG seed (u64)");
  app.add_option("--mode", opt.mode, "Simulator: direct or mechanistic")
      ->check(CLI::IsMember({"direct", "mechanistic"}));
  app.add_flag("--clamp-infeasible", opt.clamp_infeasible,
               "Clamp infeasible solver output into the parameter space");
  app.add_option("--level", opt.level, "Wald interval level")->check(CLI::Range(0.0, 1.0));
  app.add_option("--out", opt.out, "Output directory");
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "Simulate a count matrix");

  EstimateOptionsCli est;
  auto* estc = app.add_subcommand("estimate", "Estimate (q, p) from counts");
  estc->add_option("--data", est.data, "Count CSV (simulated from the config when omitted)");

  StudyOptionsCli st;
  auto* mc = app.add_subcommand("mc-study", "Monte Carlo study over a grid of n");
  mc->add_option("--replications", st.replications, "Monte Carlo replications per n")
      ->check(CLI::PositiveNumber);
  mc->add_option("--n-grid", st.n_grid, "Replication counts n to study")->delimiter(',');

  IsotonicOptionsCli iso;
  auto* isoc = app.add_subcommand("isotonic", "Project a vector onto decreasing order");
  isoc->add_option("--values", iso.values, "Comma-separated vector");
  isoc->add_option("--input", iso.input, "File holding the vector");
  isoc->add_option("--truth", iso.truth, "Reference vector for error norms")->delimiter(',');
  isoc->add_option("--tol", iso.tol, "Tolerance for flat regions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    return report_error(ErrorKind::Validation, e.what());
  }

  try {
    if (*sim) return cmd_simulate(opt);
    if (*estc) return cmd_estimate(opt, est);
    if (*mc) return cmd_mc_study(opt, st);
    if (*isoc) return cmd_isotonic(opt, iso);
  } catch (const Error& e) {
    std::cout << io::error_json(e).dump() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    return report_error(ErrorKind::Io, e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorKind::Validation, e.what());
  }
  return 0;
}

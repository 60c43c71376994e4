#ifndef ADVI_OUTPUT_HPP
#define ADVI_OUTPUT_HPP

#include <advi/advi.hpp>
#include <advi/errors.hpp>

#include <json.hpp>

#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace advi {

/** Shortest-round-trip-safe text: 17 significant digits, %g style. */
inline std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_real failed");
  return std::string(buf, end);
}

inline double parse_real(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("not a number: '" + text + "'");
  return value;
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace detail

/** Header of column names, then one comma-separated row per draw. */
inline void write_samples_csv(const std::string& path,
                              const posterior_draws& draws) {
  std::ofstream out = detail::open_output(path);
  for (std::size_t j = 0; j < draws.columns.size(); ++j)
    out << (j ? "," : "") << draws.columns[j];
  out << '\n';
  for (const std::vector<double>& row : draws.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << format_real(row[j]);
    out << '\n';
  }
  detail::finish_output(out, path);
}

inline posterior_draws read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path + ": cannot open samples file");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  posterior_draws draws;
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ": empty samples file");
  draws.columns = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != draws.columns.size())
      throw shape_error(path + ": line " + std::to_string(line_no) +
                        " has the wrong number of values");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) row.push_back(parse_real(c));
    draws.rows.push_back(std::move(row));
  }
  return draws;
}

/**
 * iteration,elapsed_ms,elbo rows. With include_timing false the elapsed
 * column is written as 0 so that repeated runs give identical files.
 */
inline void write_diagnostics_csv(const std::string& path,
                                  const elbo_trace& trace,
                                  bool include_timing = true) {
  std::ofstream out = detail::open_output(path);
  out << "iteration,elapsed_ms,elbo\n";
  for (const elbo_row& row : trace)
    out << row.iteration << ','
        << format_real(include_timing ? row.elapsed_ms : 0.0) << ','
        << format_real(row.elbo) << '\n';
  detail::finish_output(out, path);
}

/** Everything needed to reproduce a run, plus what it produced. */
struct run_manifest {
  std::string model;
  std::map<std::string, double> hyperparameters;
  std::map<std::string, long long> dims;
  advi_config config;
  std::string data_path;
  std::string heldout_path;
  std::string output_path;
  std::string diagnostic_path;
  std::size_t draws = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t clamp_events = 0;
  std::size_t redraws = 0;
  double optimize_ms = 0.0;
  double total_ms = 0.0;
  std::optional<double> heldout_log_predictive;
};

inline nlohmann::json to_json(const run_manifest& m,
                              const variational_params& params) {
  nlohmann::json config = {
      {"grad_samples", m.config.grad_samples},
      {"elbo_samples", m.config.elbo_samples},
      {"step_scale", m.config.step_scale},
      {"step_offset", m.config.step_offset},
      {"step_decay", m.config.step_decay},
      {"window", m.config.window},
      {"threshold", m.config.threshold},
      {"eval_interval", m.config.eval_interval},
      {"max_iterations", m.config.max_iterations},
      {"seed", m.config.seed},
      {"init", m.config.init == init_mode::zero ? "zero" : "gaussian"},
      {"threads", m.config.threads},
  };
  config["minibatch"] =
      m.config.minibatch ? nlohmann::json(*m.config.minibatch) : nlohmann::json();
  nlohmann::json j = {
      {"model", m.model},
      {"hyperparameters", m.hyperparameters},
      {"dims", m.dims},
      {"config", config},
      {"inputs", {{"data", m.data_path}, {"heldout", m.heldout_path}}},
      {"outputs",
       {{"samples", m.output_path}, {"diagnostics", m.diagnostic_path}}},
      {"result",
       {{"iterations", m.iterations},
        {"converged", m.converged},
        {"draws", m.draws},
        {"omega_clamp_events", m.clamp_events},
        {"gradient_redraws", m.redraws}}},
      {"timing_ms", {{"optimize", m.optimize_ms}, {"total", m.total_ms}}},
      {"variational", {{"mu", params.mu}, {"omega", params.omega}}},
  };
  j["result"]["heldout_log_predictive"] =
      m.heldout_log_predictive ? nlohmann::json(*m.heldout_log_predictive)
                               : nlohmann::json();
  return j;
}

struct output_paths {
  std::string samples;
  std::string diagnostics;
  std::string manifest;
  bool include_timing = true;
};

/** Samples CSV, diagnostics CSV and the JSON manifest. */
inline void write_outputs(const variational_params& params,
                          const posterior_draws& draws,
                          const elbo_trace& trace,
                          const run_manifest& manifest,
                          const output_paths& paths) {
  write_samples_csv(paths.samples, draws);
  write_diagnostics_csv(paths.diagnostics, trace, paths.include_timing);
  std::ofstream out = detail::open_output(paths.manifest);
  out << to_json(manifest, params).dump(2) << '\n';
  detail::finish_output(out, paths.manifest);
}

}  // namespace advi

#endif

#ifndef ADVI_CLI_HPP
#define ADVI_CLI_HPP

#include <advi/advi.hpp>
#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/evaluation.hpp>
#include <advi/output.hpp>
#include <advi/zoo.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace advi {

enum exit_code : int {
  exit_ok = 0,
  exit_io = 1,
  exit_config = 2,
  exit_evaluation = 3,
};

namespace detail {

template <typename V>
std::map<std::string, V> parse_assignments(const std::vector<std::string>& items,
                                           const char* flag) {
  std::map<std::string, V> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw config_error(std::string(flag) + " expects name=value, got '" +
                         item + "'");
    const std::string name = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<V, double>) {
        out[name] = std::stod(text, &used);
      } else {
        out[name] = std::stoll(text, &used);
      }
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::logic_error&) {
      throw config_error(std::string(flag) + " " + name + ": bad value '" +
                         text + "'");
    }
  }
  return out;
}

}  // namespace detail

/**
 * Batch entry point: fit a zoo model to a JSON dataset, write posterior
 * draws, the ELBO trace and a JSON manifest, and optionally score held-out
 * data. Returns 0 on success, 2 on a configuration error, 3 when the model
 * cannot be evaluated, 1 on I/O failure.
 */
inline int cli_main(int argc, const char* const* argv,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Automatic differentiation variational inference"};
  app.set_help_flag("-h,--help", "Print this help message and exit");

  std::string model_name;
  std::string data_path;
  std::string heldout_path;
  std::string output_path = "output_advi.csv";
  std::string diagnostic_path = "elbo_advi.csv";
  std::string manifest_path;
  std::vector<std::string> hyper_items;
  std::vector<std::string> dim_items;
  std::string init = "zero";
  std::string timing = "wall";
  std::size_t draws = 1000;
  std::optional<std::size_t> minibatch;
  advi_config config;

  app.add_option("--model", model_name, "Zoo model name")->required();
  app.add_option("--data", data_path, "JSON dataset");
  app.add_option("--heldout", heldout_path, "JSON held-out dataset");
  app.add_option("--output", output_path, "Posterior samples CSV");
  app.add_option("--diagnostic", diagnostic_path, "ELBO trace CSV");
  app.add_option("--manifest", manifest_path,
                 "Run manifest JSON (default: <output>.manifest.json)");
  app.add_option("--grad-samples", config.grad_samples,
                 "Monte Carlo draws per gradient")
      ->check(CLI::PositiveNumber);
  app.add_option("--elbo-samples", config.elbo_samples,
                 "Monte Carlo draws per ELBO estimate")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", config.seed, "Random seed");
  app.add_option("--max-iters", config.max_iterations, "Iteration budget");
  app.add_option("--threshold", config.threshold,
                 "Relative ELBO change that stops the run")
      ->check(CLI::PositiveNumber);
  app.add_option("--eval-every", config.eval_interval,
                 "Iterations between ELBO estimates")
      ->check(CLI::PositiveNumber);
  app.add_option("--minibatch", minibatch, "Minibatch size B")
      ->check(CLI::PositiveNumber);
  app.add_option("--draws", draws, "Posterior draws to write")
      ->check(CLI::PositiveNumber);
  app.add_option("--init", init, "Initial mean: zero or gaussian")
      ->check(CLI::IsMember({"zero", "gaussian"}));
  app.add_option("--hyper", hyper_items, "Model hyperparameter name=value");
  app.add_option("--dim", dim_items,
                 "Model dimension name=value (default: read from the data)");
  app.add_option("--eta", config.step_scale, "Step-size scale")
      ->check(CLI::PositiveNumber);
  app.add_option("--step-decay", config.step_decay,
                 "Exponent of the i^-d step-size decay")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--threads", config.threads,
                 "Workers for the gradient samples of one iteration")
      ->check(CLI::PositiveNumber);
  app.add_option("--timing", timing,
                 "elapsed_ms column: wall clock, or none (written as 0)")
      ->check(CLI::IsMember({"wall", "none"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_config;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    config.minibatch = minibatch;
    config.init = init == "gaussian" ? init_mode::gaussian : init_mode::zero;
    if (manifest_path.empty()) manifest_path = output_path + ".manifest.json";

    const dataset data = data_path.empty() ? dataset{} : load_dataset(data_path);
    const auto hypers = detail::parse_assignments<double>(hyper_items, "--hyper");
    const auto dim_overrides =
        detail::parse_assignments<long long>(dim_items, "--dim");
    const dim_map dims = infer_dims(model_name, data, dim_overrides);
    const std::unique_ptr<model> m = make_model(model_name, hypers, dims);
    try {
      m->validate(data);
    } catch (const shape_error& e) {
      throw config_error(e.what());
    }

    const advi_result fit = run_advi(*m, data, config);
    const double optimize_ms = fit.trace.empty() ? 0.0 : fit.trace.back().elapsed_ms;
    for (std::size_t k = 0; k < fit.params.dim(); ++k)
      if (!std::isfinite(fit.params.mu[k]) || !std::isfinite(fit.params.omega[k]))
        throw evaluation_error("variational parameters are not finite");

    const posterior_draws posterior = draw_posterior(
        *m, fit.params, draws, random_stream(config.seed).child(stream_draws));

    run_manifest manifest;
    manifest.model = model_name;
    manifest.hyperparameters = m->hyperparameters();
    manifest.dims = m->dims();
    manifest.config = config;
    manifest.data_path = data_path;
    manifest.heldout_path = heldout_path;
    manifest.output_path = output_path;
    manifest.diagnostic_path = diagnostic_path;
    manifest.draws = draws;
    manifest.iterations = fit.iterations;
    manifest.converged = fit.converged;
    manifest.clamp_events = fit.clamp_events;
    manifest.redraws = fit.redraws;
    manifest.optimize_ms = optimize_ms;

    if (!heldout_path.empty()) {
      const dataset heldout = load_dataset(heldout_path);
      const eval_report report = heldout_log_predictive(*m, posterior, heldout);
      manifest.heldout_log_predictive = report.mean_log_predictive;
      out << "heldout_log_predictive " << format_real(report.mean_log_predictive)
          << " points " << report.num_points << " draws " << report.num_draws
          << '\n';
      if (report.zero_likelihood_index)
        out << "warning: held-out point " << *report.zero_likelihood_index
            << " has zero likelihood under every draw\n";
    }

    manifest.total_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_outputs(fit.params, posterior, fit.trace, manifest,
                  {output_path, diagnostic_path, manifest_path,
                   timing == "wall"});

    out << "model " << model_name << " dim " << m->dim() << " iterations "
        << fit.iterations << (fit.converged ? " converged" : " budget exhausted")
        << '\n';
    if (!fit.trace.empty())
      out << "elbo " << format_real(fit.trace.back().elbo) << '\n';
    return exit_ok;
  } catch (const evaluation_error& e) {
    err << "evaluation failure: " << e.what() << '\n';
    return exit_evaluation;
  } catch (const std::invalid_argument& e) {
    // config_error and shape_error
    err << "configuration error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::domain_error& e) {
    err << "evaluation failure: " << e.what() << '\n';
    return exit_evaluation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  }
}

}  // namespace advi

#endif

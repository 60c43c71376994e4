#ifndef ADVI_ADVI_HPP
#define ADVI_ADVI_HPP

#include <advi/autodiff.hpp>
#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/model.hpp>
#include <advi/random.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace advi {

/** Mean-field Gaussian q(zeta) = N(mu, diag(exp(2 omega))). */
struct variational_params {
  std::vector<double> mu;
  std::vector<double> omega;

  static variational_params zeros(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  }

  std::size_t dim() const noexcept { return mu.size(); }
};

enum class init_mode { zero, gaussian };

struct advi_config {
  std::size_t grad_samples = 1;
  std::size_t elbo_samples = 100;
  double step_scale = 0.1;
  double step_offset = 1.0;
  // Optional extra factor i^-step_decay on the adaGrad step; 0 disables it.
  double step_decay = 0.0;
  std::size_t window = 10;
  double threshold = 0.01;
  std::size_t eval_interval = 100;
  std::size_t max_iterations = 10000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> minibatch;
  init_mode init = init_mode::zero;
  std::size_t threads = 1;
  double omega_bound = 20.0;
  std::size_t max_redraws = 10;

  void validate() const {
    if (grad_samples < 1) throw config_error("grad_samples must be >= 1");
    if (elbo_samples < 1) throw config_error("elbo_samples must be >= 1");
    if (window < 1) throw config_error("window must be >= 1");
    if (eval_interval < 1) throw config_error("eval_interval must be >= 1");
    if (!(threshold > 0.0)) throw config_error("threshold must be > 0");
    if (!(step_scale > 0.0)) throw config_error("step_scale must be > 0");
    if (!(step_offset >= 0.0)) throw config_error("step_offset must be >= 0");
    if (!(step_decay >= 0.0)) throw config_error("step_decay must be >= 0");
    if (minibatch && *minibatch < 1)
      throw config_error("minibatch size must be >= 1");
    if (threads < 1) throw config_error("threads must be >= 1");
  }
};

// ---------------------------------------------------------------------------

/** zeta = exp(omega) * eta + mu, elementwise. */
inline std::vector<double> inverse_standardize(const variational_params& p,
                                               std::span<const double> eta) {
  if (eta.size() != p.dim() || p.omega.size() != p.dim())
    throw shape_error("inverse_standardize: length mismatch");
  std::vector<double> zeta(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k)
    zeta[k] = std::exp(p.omega[k]) * eta[k] + p.mu[k];
  return zeta;
}

/** K/2 (1 + log 2 pi) + sum(omega). */
inline double gaussian_entropy(std::span<const double> omega) {
  const double k = static_cast<double>(omega.size());
  double total = 0.5 * k * (1.0 + std::log(2.0 * std::numbers::pi));
  for (double w : omega) total += w;
  return total;
}

/**
 * Monte Carlo ELBO: mean of the transformed log joint over n_samples draws
 * from q, plus the Gaussian entropy. Draws whose log joint is not finite are
 * dropped; if all are, evaluation_error is raised.
 *
 * Draw s uses stream.engine(s).
 */
inline double estimate_elbo(const model& m, const dataset& data,
                            const variational_params& params,
                            std::size_t n_samples,
                            const random_stream& stream) {
  if (n_samples < 1) throw config_error("estimate_elbo: n_samples must be >= 1");
  const std::size_t dim = m.dim();
  if (params.dim() != dim) throw shape_error("estimate_elbo: params length");
  std::vector<double> eta(dim);
  double total = 0.0;
  std::size_t kept = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::mt19937_64 engine = stream.engine(s);
    standard_normal(engine, eta);
    const std::vector<double> zeta = inverse_standardize(params, eta);
    double value;
    try {
      value = m.log_joint(std::span<const double>(zeta), data);
    } catch (const std::domain_error&) {
      continue;
    }
    if (!std::isfinite(value)) continue;
    total += value;
    ++kept;
  }
  if (kept == 0)
    throw evaluation_error(
        "estimate_elbo: every draw gave a non-finite log joint");
  return total / static_cast<double>(kept) + gaussian_entropy(params.omega);
}

struct gradient_estimate {
  std::vector<double> mu;
  std::vector<double> omega;
  std::size_t redraws = 0;
};

namespace detail {

struct sample_gradient {
  std::vector<double> grad;  // d log_joint / d zeta
  std::vector<double> eta;
  std::size_t redraws = 0;
  std::exception_ptr error;
};

inline void gradient_sample(const model& m, const dataset& data,
                            const variational_params& params,
                            const random_stream& stream, std::size_t iteration,
                            std::size_t sample, const minibatch* batch,
                            std::size_t max_redraws, expression_graph& graph,
                            sample_gradient& out) {
  const std::size_t dim = m.dim();
  out.eta.assign(dim, 0.0);
  std::vector<var> leaves(dim);
  std::string last_error = "non-finite value";
  for (std::size_t attempt = 0; attempt <= max_redraws; ++attempt) {
    std::mt19937_64 engine = stream.engine(iteration, sample, attempt);
    standard_normal(engine, out.eta);
    const std::vector<double> zeta = inverse_standardize(params, out.eta);
    try {
      graph.clear();
      for (std::size_t k = 0; k < dim; ++k) leaves[k] = graph.variable(zeta[k]);
      const var lp = m.log_joint(std::span<const var>(leaves), data, batch);
      if (std::isfinite(lp.value())) {
        out.grad = gradient(lp, leaves);
        if (std::all_of(out.grad.begin(), out.grad.end(),
                        [](double g) { return std::isfinite(g); })) {
          out.redraws = attempt;
          graph.clear();
          return;
        }
        last_error = "non-finite gradient";
      } else {
        last_error = "non-finite log joint";
      }
    } catch (const std::domain_error& e) {
      last_error = e.what();
    }
  }
  graph.clear();
  throw evaluation_error("gradient sample " + std::to_string(sample) +
                         " failed after " + std::to_string(max_redraws) +
                         " redraws: " + last_error);
}

}  // namespace detail

/**
 * Monte Carlo estimate of the ELBO gradient with respect to mu and omega
 * from M draws eta ~ N(0, I):
 *
 *   g_mu    = mean_m grad(eta_m)
 *   g_omega = mean_m grad(eta_m) * eta_m * exp(omega) + 1
 *
 * where grad is the gradient of the transformed log joint at
 * zeta = exp(omega) * eta + mu. Sample m uses stream.engine(iteration, m,
 * attempt); a draw giving a non-finite value or gradient is redrawn up to
 * max_redraws times. With threads > 1 samples run on worker-local graphs
 * and are reduced in sample order, so the result does not depend on it.
 */
inline gradient_estimate estimate_gradients(
    const model& m, const dataset& data, const variational_params& params,
    std::size_t grad_samples, const random_stream& stream,
    std::size_t iteration = 0, const minibatch* batch = nullptr,
    std::size_t threads = 1, std::size_t max_redraws = 10) {
  if (grad_samples < 1)
    throw config_error("estimate_gradients: grad_samples must be >= 1");
  const std::size_t dim = m.dim();
  if (params.dim() != dim || params.omega.size() != dim)
    throw shape_error("estimate_gradients: params length");

  std::vector<detail::sample_gradient> samples(grad_samples);
  auto run = [&](std::size_t first, std::size_t step) {
    expression_graph graph;
    for (std::size_t s = first; s < grad_samples; s += step) {
      try {
        detail::gradient_sample(m, data, params, stream, iteration, s, batch,
                                max_redraws, graph, samples[s]);
      } catch (...) {
        samples[s].error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(threads, grad_samples);
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run, t, workers);
  }

  gradient_estimate out{std::vector<double>(dim, 0.0),
                        std::vector<double>(dim, 0.0), 0};
  for (const detail::sample_gradient& s : samples) {
    if (s.error) std::rethrow_exception(s.error);
    for (std::size_t k = 0; k < dim; ++k) {
      out.mu[k] += s.grad[k];
      out.omega[k] += s.grad[k] * s.eta[k] * std::exp(params.omega[k]);
    }
    out.redraws += s.redraws;
  }
  const double inv_m = 1.0 / static_cast<double>(grad_samples);
  for (std::size_t k = 0; k < dim; ++k) {
    out.mu[k] *= inv_m;
    out.omega[k] = out.omega[k] * inv_m + 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

/**
 * adaGrad with a finite memory: s_k is the sum of the squared gradients of
 * the last `window` steps, and the step size is
 * step_scale / (step_offset + sqrt(s_k)).
 */
class windowed_adagrad {
 public:
  windowed_adagrad(std::size_t dim, std::size_t window)
      : dim_(dim), window_(window), buffer_(dim * window, 0.0), sums_(dim, 0.0) {
    if (window < 1) throw config_error("adagrad window must be >= 1");
  }

  std::vector<double> step(std::span<const double> g, double step_scale,
                           double step_offset) {
    if (g.size() != dim_) throw shape_error("adagrad: gradient length");
    // Newest entry overwrites the oldest when the window is full.
    double* slot = buffer_.data() + head_ * dim_;
    for (std::size_t k = 0; k < dim_; ++k) slot[k] = g[k] * g[k];
    head_ = (head_ + 1) % window_;
    count_ = std::min(count_ + 1, window_);

    // Recomputed oldest-to-newest so s is exactly the windowed sum.
    std::fill(sums_.begin(), sums_.end(), 0.0);
    const std::size_t oldest = (head_ + window_ - count_) % window_;
    for (std::size_t j = 0; j < count_; ++j) {
      const double* row = buffer_.data() + ((oldest + j) % window_) * dim_;
      for (std::size_t k = 0; k < dim_; ++k) sums_[k] += row[k];
    }

    std::vector<double> rho(dim_);
    for (std::size_t k = 0; k < dim_; ++k)
      rho[k] = step_scale / (step_offset + std::sqrt(sums_[k]));
    return rho;
  }

  const std::vector<double>& sum_squares() const noexcept { return sums_; }
  std::size_t filled() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t window() const noexcept { return window_; }

 private:
  std::size_t dim_;
  std::size_t window_;
  std::vector<double> buffer_;
  std::vector<double> sums_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

/** Optimizer state: iteration counter and step-size memories for mu, omega. */
struct opt_state {
  std::size_t iteration = 0;
  windowed_adagrad mu;
  windowed_adagrad omega;

  opt_state(std::size_t dim, std::size_t window)
      : mu(dim, window), omega(dim, window) {}
};

inline std::vector<double> adagrad_step(windowed_adagrad& state,
                                        std::span<const double> g,
                                        const advi_config& config) {
  return state.step(g, config.step_scale, config.step_offset);
}

// ---------------------------------------------------------------------------

struct elbo_row {
  std::size_t iteration;
  double elapsed_ms;
  double elbo;
};

using elbo_trace = std::vector<elbo_row>;

struct advi_result {
  variational_params params;
  elbo_trace trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t clamp_events = 0;
  std::size_t redraws = 0;
};

// Substream tags under the run seed.
inline constexpr std::uint64_t stream_gradient = 1;
inline constexpr std::uint64_t stream_minibatch = 2;
inline constexpr std::uint64_t stream_elbo = 3;
inline constexpr std::uint64_t stream_init = 4;
inline constexpr std::uint64_t stream_draws = 5;

inline double relative_change(double previous, double current) {
  return std::abs((current - previous) / previous);
}

/**
 * Stochastic gradient ascent on the ELBO.
 *
 * Each iteration i = 1, 2, ... estimates the gradient from
 * config.grad_samples draws, takes a windowed adaGrad step scaled by
 * i^-step_decay, and clamps omega to [-omega_bound, omega_bound]. Every
 * eval_interval iterations the ELBO is estimated from elbo_samples draws and
 * appended to the trace; the run stops once the relative change between the
 * last two estimates is below config.threshold, or after max_iterations.
 *
 * With a minibatch size (from the config, else the model's default) each
 * iteration uses a uniformly drawn subset without replacement and the
 * likelihood scaled by N / B. The ELBO trace always uses the full data.
 */
inline advi_result run_advi(const model& m, const dataset& data,
                            const advi_config& config) {
  config.validate();
  m.validate(data);
  const std::size_t dim = m.dim();
  const random_stream root(config.seed);
  const random_stream grad_stream = root.child(stream_gradient);
  const random_stream batch_stream = root.child(stream_minibatch);
  const random_stream elbo_stream = root.child(stream_elbo);

  advi_result result;
  result.params = variational_params::zeros(dim);
  if (config.init == init_mode::gaussian) {
    std::mt19937_64 engine = root.child(stream_init).engine();
    standard_normal(engine, result.params.mu);
  }

  std::optional<std::size_t> batch_size =
      config.minibatch ? config.minibatch : m.default_batch_size();
  std::optional<minibatch> batch;
  std::vector<std::size_t> all_indices;
  if (batch_size) {
    if (!m.supports_subsampling())
      throw config_error(m.name() + ": likelihood does not factorize");
    const std::size_t n = m.num_observations(data);
    if (*batch_size > n)
      throw config_error("minibatch size " + std::to_string(*batch_size) +
                         " exceeds the " + std::to_string(n) + " observations");
    batch.emplace();
    batch->total = n;
    all_indices.resize(n);
    std::iota(all_indices.begin(), all_indices.end(), std::size_t{0});
  }

  opt_state state(dim, config.window);
  variational_params& p = result.params;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t i = 1; i <= config.max_iterations; ++i) {
    state.iteration = i;
    if (batch) {
      std::mt19937_64 engine = batch_stream.engine(i);
      batch->indices.clear();
      std::sample(all_indices.begin(), all_indices.end(),
                  std::back_inserter(batch->indices), *batch_size, engine);
    }

    gradient_estimate g;
    try {
      g = estimate_gradients(m, data, p, config.grad_samples, grad_stream, i,
                             batch ? &*batch : nullptr, config.threads,
                             config.max_redraws);
    } catch (const evaluation_error& e) {
      throw evaluation_error(std::string(e.what()) + " at iteration " +
                                 std::to_string(i),
                             i, p.mu, p.omega);
    }
    result.redraws += g.redraws;

    const std::vector<double> rho_mu = adagrad_step(state.mu, g.mu, config);
    const std::vector<double> rho_omega =
        adagrad_step(state.omega, g.omega, config);
    const double decay =
        config.step_decay == 0.0
            ? 1.0
            : std::pow(static_cast<double>(i), -config.step_decay);
    for (std::size_t k = 0; k < dim; ++k) {
      p.mu[k] += decay * rho_mu[k] * g.mu[k];
      p.omega[k] += decay * rho_omega[k] * g.omega[k];
      if (p.omega[k] > config.omega_bound) {
        p.omega[k] = config.omega_bound;
        ++result.clamp_events;
      } else if (p.omega[k] < -config.omega_bound) {
        p.omega[k] = -config.omega_bound;
        ++result.clamp_events;
      }
    }
    result.iterations = i;

    if (i % config.eval_interval == 0) {
      double elbo;
      try {
        elbo = estimate_elbo(m, data, p, config.elbo_samples,
                             elbo_stream.child(i));
      } catch (const evaluation_error& e) {
        throw evaluation_error(std::string(e.what()) + " at iteration " +
                                   std::to_string(i),
                               i, p.mu, p.omega);
      }
      const double elapsed =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - start)
              .count();
      result.trace.push_back({i, elapsed, elbo});
      const std::size_t n = result.trace.size();
      if (n >= 2 && relative_change(result.trace[n - 2].elbo, elbo) <
                        config.threshold) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

/** Draws from q pushed through T^{-1}; one row per draw in column order. */
struct posterior_draws {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/** Draw s uses stream.engine(s). */
inline posterior_draws draw_posterior(const model& m,
                                      const variational_params& params,
                                      std::size_t n_draws,
                                      const random_stream& stream) {
  if (n_draws < 1) throw config_error("draw_posterior: need at least 1 draw");
  if (params.dim() != m.dim())
    throw shape_error("draw_posterior: params length");
  posterior_draws out;
  out.columns = m.column_names();
  out.rows.reserve(n_draws);
  std::vector<double> eta(m.dim());
  for (std::size_t s = 0; s < n_draws; ++s) {
    std::mt19937_64 engine = stream.engine(s);
    standard_normal(engine, eta);
    const std::vector<double> zeta = inverse_standardize(params, eta);
    out.rows.push_back(m.constrain(zeta));
  }
  return out;
}

}  // namespace advi

#endif

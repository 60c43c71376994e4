#ifndef ADVI_SYNTHETIC_HPP
#define ADVI_SYNTHETIC_HPP

#include <advi/autodiff.hpp>
#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/random.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

// Simulated datasets for the zoo models, in the layout each model reads.
// The coefficient magnitudes and group structure are free choices.

namespace advi::synthetic {

struct simulated {
  dataset train;
  dataset heldout;
  std::map<std::string, std::vector<double>> truth;
};

inline simulated poisson_counts(std::size_t n_train, std::size_t n_heldout,
                                double rate, std::uint64_t seed) {
  std::mt19937_64 engine = random_stream(seed).engine();
  std::poisson_distribution<long long> poisson(rate);
  auto draw = [&](std::size_t n) {
    std::vector<long long> x(n);
    for (auto& v : x) v = poisson(engine);
    dataset d;
    d.set_int("N", static_cast<long long>(n));
    d.set_ints("x", std::move(x));
    return d;
  };
  simulated out{draw(n_train), draw(n_heldout), {{"lambda", {rate}}}};
  return out;
}

/**
 * x ~ N(0, I), y = x . w + N(0, noise_sd^2). The first round(D * active)
 * coefficients are drawn from +-U(1, 3); the rest are exactly zero.
 */
inline simulated linreg(std::size_t n_train, std::size_t n_heldout,
                        std::size_t dim, double active_fraction,
                        double noise_sd, std::uint64_t seed) {
  const random_stream stream(seed);
  std::mt19937_64 engine = stream.engine(0);
  std::uniform_real_distribution<double> magnitude(1.0, 3.0);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n_active = static_cast<std::size_t>(
      std::lround(static_cast<double>(dim) * active_fraction));
  std::vector<double> w(dim, 0.0);
  for (std::size_t i = 0; i < n_active; ++i)
    w[i] = (sign(engine) ? 1.0 : -1.0) * magnitude(engine);

  auto draw = [&](std::size_t n) {
    std::vector<double> x(n * dim);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
      double mean = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        x[r * dim + c] = normal(engine);
        mean += x[r * dim + c] * w[c];
      }
      y[r] = mean + noise_sd * normal(engine);
    }
    dataset d;
    d.set_int("N", static_cast<long long>(n));
    d.set_int("D", static_cast<long long>(dim));
    d.set_reals("x", std::move(x), {n, dim});
    d.set_reals("y", std::move(y));
    return d;
  };
  simulated out;
  out.train = draw(n_train);
  out.heldout = draw(n_heldout);
  out.truth["w"] = w;
  out.truth["sigma2"] = {noise_sd * noise_sd};
  return out;
}

struct logistic_groups {
  long long n_age = 4;
  long long n_edu = 4;
  long long n_state = 8;
  long long n_region_full = 4;
};

/** Respondents with random group memberships and a hierarchical logit. */
inline simulated hier_logistic(std::size_t n_train, std::size_t n_heldout,
                               const logistic_groups& groups,
                               std::uint64_t seed) {
  const random_stream stream(seed);
  std::mt19937_64 engine = stream.engine(0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const long long n_age_edu = groups.n_age * groups.n_edu;

  auto effects = [&](long long n, double sd) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = sd * normal(engine);
    return v;
  };
  const std::vector<double> a = effects(groups.n_age, 0.5);
  const std::vector<double> b = effects(groups.n_edu, 0.5);
  const std::vector<double> c = effects(n_age_edu, 0.2);
  const std::vector<double> d = effects(groups.n_state, 0.4);
  const std::vector<double> e = effects(groups.n_region_full, 0.3);
  const std::vector<double> beta = {0.2, -1.0, 0.3, 0.8, 0.4};
  std::vector<double> v_prev_state(static_cast<std::size_t>(groups.n_state));
  for (double& v : v_prev_state) v = 0.5 * normal(engine);
  std::vector<long long> state_region(static_cast<std::size_t>(groups.n_state));
  for (std::size_t s = 0; s < state_region.size(); ++s)
    state_region[s] = static_cast<long long>(s) % groups.n_region_full + 1;

  auto draw = [&](std::size_t n) {
    std::uniform_int_distribution<long long> age_d(1, groups.n_age);
    std::uniform_int_distribution<long long> edu_d(1, groups.n_edu);
    std::uniform_int_distribution<long long> state_d(1, groups.n_state);
    std::vector<long long> age(n), edu(n), age_edu(n), state(n), region(n), y(n);
    std::vector<double> black(n), female(n), v_prev(n);
    for (std::size_t i = 0; i < n; ++i) {
      age[i] = age_d(engine);
      edu[i] = edu_d(engine);
      age_edu[i] = (age[i] - 1) * groups.n_edu + edu[i];
      state[i] = state_d(engine);
      region[i] = state_region[static_cast<std::size_t>(state[i] - 1)];
      black[i] = coin(engine) ? 1.0 : 0.0;
      female[i] = coin(engine) ? 1.0 : 0.0;
      v_prev[i] = v_prev_state[static_cast<std::size_t>(state[i] - 1)];
      const double eta = beta[0] + beta[1] * black[i] + beta[2] * female[i] +
                         beta[4] * female[i] * black[i] + beta[3] * v_prev[i] +
                         a[age[i] - 1] + b[edu[i] - 1] + c[age_edu[i] - 1] +
                         d[state[i] - 1] + e[region[i] - 1];
      y[i] = std::bernoulli_distribution(logistic(eta))(engine) ? 1 : 0;
    }
    dataset out;
    out.set_int("N", static_cast<long long>(n));
    out.set_int("n_age", groups.n_age);
    out.set_int("n_edu", groups.n_edu);
    out.set_int("n_age_edu", n_age_edu);
    out.set_int("n_state", groups.n_state);
    out.set_int("n_region_full", groups.n_region_full);
    out.set_ints("age", std::move(age));
    out.set_ints("edu", std::move(edu));
    out.set_ints("age_edu", std::move(age_edu));
    out.set_ints("state", std::move(state));
    out.set_ints("region_full", std::move(region));
    out.set_reals("black", std::move(black));
    out.set_reals("female", std::move(female));
    out.set_reals("v_prev_full", std::move(v_prev));
    out.set_ints("y", std::move(y));
    return out;
  };
  simulated out;
  out.train = draw(n_train);
  out.heldout = draw(n_heldout);
  out.truth["beta"] = beta;
  return out;
}

/**
 * Count matrix y[u, i] ~ poisson(theta[u] . beta[i]) with gamma(1, 1)
 * factors. The held-out matrix is an independent draw from the same factors.
 */
inline simulated poisson_factorization(std::size_t users, std::size_t items,
                                       std::size_t factors,
                                       std::uint64_t seed) {
  const random_stream stream(seed);
  std::mt19937_64 engine = stream.engine(0);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> theta(users * factors), beta(items * factors);
  for (double& t : theta) t = gamma(engine);
  for (double& b : beta) b = gamma(engine);

  auto draw = [&]() {
    std::vector<long long> y(users * items);
    for (std::size_t u = 0; u < users; ++u)
      for (std::size_t i = 0; i < items; ++i) {
        double rate = 0.0;
        for (std::size_t k = 0; k < factors; ++k)
          rate += theta[u * factors + k] * beta[i * factors + k];
        y[u * items + i] = std::poisson_distribution<long long>(rate)(engine);
      }
    dataset d;
    d.set_int("U", static_cast<long long>(users));
    d.set_int("I", static_cast<long long>(items));
    d.set_int("K", static_cast<long long>(factors));
    d.set_ints("y", std::move(y), {users, items});
    return d;
  };
  simulated out;
  out.train = draw();
  out.heldout = draw();
  out.truth["theta"] = theta;
  out.truth["beta"] = beta;
  return out;
}

/**
 * Equal-weight mixture of isotropic Gaussians with the given component means
 * (K x D, row-major) and common standard deviation.
 */
inline simulated gaussian_mixture(std::size_t n_train, std::size_t n_heldout,
                                  const std::vector<double>& means,
                                  std::size_t dim, double sd,
                                  std::uint64_t seed) {
  if (dim == 0 || means.size() % dim != 0)
    throw shape_error("gaussian_mixture: means must be K x D");
  const std::size_t k = means.size() / dim;
  const random_stream stream(seed);
  std::mt19937_64 engine = stream.engine(0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);

  auto draw = [&](std::size_t n) {
    std::vector<double> y(n * dim);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t c = pick(engine);
      for (std::size_t d = 0; d < dim; ++d)
        y[r * dim + d] = means[c * dim + d] + sd * normal(engine);
    }
    dataset out;
    out.set_int("N", static_cast<long long>(n));
    out.set_int("D", static_cast<long long>(dim));
    out.set_int("K", static_cast<long long>(k));
    out.set_reals("y", std::move(y), {n, dim});
    return out;
  };
  simulated out;
  out.train = draw(n_train);
  out.heldout = draw(n_heldout);
  out.truth["mu"] = means;
  out.truth["sigma"] = {sd};
  return out;
}

}  // namespace advi::synthetic

#endif

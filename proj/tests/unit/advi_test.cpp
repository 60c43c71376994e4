#include <advi/advi.hpp>
#include <advi/zoo.hpp>

#include <fixtures.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <deque>
#include <numbers>
#include <random>
#include <vector>

using advi::advi_config;
using advi::dataset;
using advi::random_stream;
using advi::variational_params;

namespace {

// y[n] ~ normal(theta, 1), theta ~ normal(0, 1). Posterior is
// normal(sum(y) / (N + 1), 1 / (N + 1)), so the mean-field optimum is exact.
class normal_mean : public advi::model_base<normal_mean> {
 public:
  normal_mean()
      : model_base("normal_mean",
                   {advi::block_spec::scalar(
                       "theta", advi::transform_kind::identity(1))},
                   {}, {}) {}
  std::size_t num_observations(const dataset& d) const override {
    return d.reals("y").size();
  }
  void validate(const dataset&) const override {}
  template <typename T>
  T log_prior(const advi::block_values<T>& v) const {
    return advi::normal_lpdf(v.scalar(0), 0.0, 1.0);
  }
  template <typename T>
  void log_likelihood(const advi::block_values<T>& v, const dataset& d,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    const auto y = d.reals("y");
    for (std::size_t n : obs)
      terms.push_back(advi::normal_lpdf(y[n], v.scalar(0), 1.0));
  }
};

// log p = log(theta - 1e6): never finite inside the support that draws reach.
class broken : public advi::model_base<broken> {
 public:
  broken()
      : model_base("broken",
                   {advi::block_spec::scalar(
                       "theta", advi::transform_kind::identity(1))},
                   {}, {}) {}
  std::size_t num_observations(const dataset&) const override { return 0; }
  void validate(const dataset&) const override {}
  template <typename T>
  T log_prior(const advi::block_values<T>& v) const {
    return log(v.scalar(0) - 1e6);
  }
  template <typename T>
  void log_likelihood(const advi::block_values<T>&, const dataset&,
                      std::span<const std::size_t>, std::vector<T>&) const {}
};

std::unique_ptr<advi::model> toy(long long dim = 1) {
  return advi::make_model("std_normal", {}, {{"D", dim}});
}

TEST(inverse_standardize, spec_examples) {
  EXPECT_EQ(advi::inverse_standardize({{0.0}, {0.0}}, std::vector{1.5})[0], 1.5);
  EXPECT_DOUBLE_EQ(
      advi::inverse_standardize({{2.0}, {std::log(3.0)}}, std::vector{1.0})[0],
      5.0);
  EXPECT_EQ(advi::inverse_standardize({{0.7}, {4.2}}, std::vector{0.0})[0], 0.7);
  EXPECT_THROW(advi::inverse_standardize({{0.0}, {0.0}}, std::vector{1.0, 2.0}),
               advi::shape_error);
}

TEST(estimate_elbo, spec_examples) {
  const auto m = toy();
  const random_stream stream(1);
  EXPECT_NEAR(advi::estimate_elbo(*m, {}, {{0.0}, {0.0}}, 100000, stream), 0.0,
              0.02);
  EXPECT_NEAR(advi::estimate_elbo(*m, {}, {{1.0}, {0.0}}, 100000, stream), -0.5,
              0.02);
  const double entropy = advi::gaussian_entropy(std::vector{0.0});
  EXPECT_NEAR(entropy, 0.5 * (1.0 + std::log(2.0 * std::numbers::pi)), 1e-15);
  EXPECT_NEAR(entropy, 1.4189385, 1e-7);
}

TEST(estimate_elbo, deterministic_and_rejects_total_failure) {
  const auto m = toy(2);
  const variational_params p{{0.3, -0.2}, {0.1, -0.4}};
  const double a = advi::estimate_elbo(*m, {}, p, 50, random_stream(9));
  const double b = advi::estimate_elbo(*m, {}, p, 50, random_stream(9));
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  broken bad;
  EXPECT_THROW(advi::estimate_elbo(bad, {}, {{0.0}, {0.0}}, 10, random_stream(0)),
               advi::evaluation_error);
}

TEST(estimate_elbo, maximized_at_the_analytic_optimum) {
  normal_mean m;
  dataset d;
  const std::vector<double> y = {0.4, 1.9, 1.1, -0.3, 2.2};
  d.set_reals("y", y);
  double total = 0.0;
  for (double v : y) total += v;
  const double n1 = static_cast<double>(y.size()) + 1.0;
  const variational_params best{{total / n1}, {-0.5 * std::log(n1)}};
  const random_stream stream(21);
  const double at_best = advi::estimate_elbo(m, d, best, 2000, stream);
  std::mt19937_64 engine(4);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int i = 0; i < 10; ++i) {
    variational_params p = best;
    p.mu[0] += normal(engine);
    p.omega[0] += normal(engine);
    EXPECT_GE(at_best, advi::estimate_elbo(m, d, p, 2000, stream));
  }
  const auto t = advi::make_model("std_normal", {}, {{"D", 2}});
  const double origin =
      advi::estimate_elbo(*t, {}, variational_params::zeros(2), 2000, stream);
  for (int i = 0; i < 10; ++i) {
    variational_params p = variational_params::zeros(2);
    for (double& v : p.mu) v = normal(engine);
    for (double& v : p.omega) v = normal(engine);
    EXPECT_GE(origin, advi::estimate_elbo(*t, {}, p, 2000, stream));
  }
}

// Mean of n single-sample estimates and its standard error.
struct mean_se {
  std::vector<double> mean, se;
};

mean_se average_gradients(const advi::model& m, const variational_params& p,
                          std::size_t n, bool omega) {
  const random_stream stream(33);
  const std::size_t dim = m.dim();
  std::vector<double> s1(dim, 0.0), s2(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = advi::estimate_gradients(m, {}, p, 1, stream, i);
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = omega ? g.omega[k] : g.mu[k];
      s1[k] += v;
      s2[k] += v * v;
    }
  }
  mean_se out{std::vector<double>(dim), std::vector<double>(dim)};
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < dim; ++k) {
    out.mean[k] = s1[k] / dn;
    out.se[k] = std::sqrt((s2[k] / dn - out.mean[k] * out.mean[k]) / dn);
  }
  return out;
}

TEST(estimate_gradients, spec_examples_within_three_standard_errors) {
  const auto m = toy();
  for (const auto& [mu, omega] : {std::pair{1.0, 0.0}, std::pair{0.0, 0.0}}) {
    const variational_params p{{mu}, {omega}};
    const auto gm = average_gradients(*m, p, 100000, false);
    const auto gw = average_gradients(*m, p, 100000, true);
    EXPECT_LE(std::abs(gm.mean[0] - (-mu)), 3.0 * gm.se[0]) << "mu=" << mu;
    EXPECT_LE(std::abs(gw.mean[0] - (1.0 - std::exp(2.0 * omega))),
              3.0 * gw.se[0])
        << "mu=" << mu;
  }
}

TEST(estimate_gradients, deterministic_and_thread_independent) {
  const auto f = advi::test::zoo_fixture("gmm");
  variational_params p = variational_params::zeros(f.m->dim());
  for (std::size_t k = 0; k < p.dim(); ++k) p.mu[k] = 0.01 * static_cast<double>(k);
  const random_stream stream(5);
  const auto a = advi::estimate_gradients(*f.m, f.data, p, 6, stream, 3);
  const auto b = advi::estimate_gradients(*f.m, f.data, p, 6, stream, 3);
  const auto c = advi::estimate_gradients(*f.m, f.data, p, 6, stream, 3,
                                          nullptr, 4);
  for (std::size_t k = 0; k < p.dim(); ++k) {
    EXPECT_EQ(a.mu[k], b.mu[k]);
    EXPECT_EQ(a.omega[k], b.omega[k]);
    EXPECT_EQ(a.mu[k], c.mu[k]);
    EXPECT_EQ(a.omega[k], c.omega[k]);
  }
}

TEST(estimate_gradients, persistent_failure_is_an_evaluation_error) {
  broken bad;
  EXPECT_THROW(advi::estimate_gradients(bad, {}, {{0.0}, {0.0}}, 1,
                                        random_stream(0)),
               advi::evaluation_error);
}

TEST(adagrad_step, spec_examples) {
  const advi_config config;
  {
    advi::windowed_adagrad s(1, config.window);
    EXPECT_DOUBLE_EQ(advi::adagrad_step(s, std::vector{1.0}, config)[0], 0.05);
  }
  {
    advi::windowed_adagrad s(1, config.window);
    for (int i = 0; i < 5; ++i)
      EXPECT_DOUBLE_EQ(advi::adagrad_step(s, std::vector{0.0}, config)[0], 0.1);
  }
  {
    advi::windowed_adagrad s(1, config.window);
    for (int i = 0; i < 11; ++i) advi::adagrad_step(s, std::vector{1.0}, config);
    const double rho = advi::adagrad_step(s, std::vector{0.0}, config)[0];
    EXPECT_EQ(s.sum_squares()[0], 9.0);
    EXPECT_DOUBLE_EQ(rho, 0.025);
  }
}

TEST(adagrad_step, window_sum_equals_brute_force) {
  std::mt19937_64 engine(99);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> window_d(1, 15);
  std::uniform_int_distribution<int> length_d(1, 60);
  for (int stream = 0; stream < 1000; ++stream) {
    const std::size_t window = window_d(engine);
    const std::size_t dim = 3;
    advi::windowed_adagrad s(dim, window);
    std::deque<std::vector<double>> history;
    const int steps = length_d(engine);
    for (int i = 0; i < steps; ++i) {
      std::vector<double> g(dim);
      for (double& v : g) v = normal(engine);
      const auto rho = s.step(g, 0.1, 1.0);
      history.push_back(g);
      if (history.size() > window) history.pop_front();
      for (std::size_t k = 0; k < dim; ++k) {
        double brute = 0.0;
        for (const auto& h : history) brute += h[k] * h[k];
        ASSERT_EQ(s.sum_squares()[k], brute);
        ASSERT_GT(rho[k], 0.0);
        ASSERT_EQ(rho[k], 0.1 / (1.0 + std::sqrt(brute)));
      }
      ASSERT_EQ(s.filled(), history.size());
    }
  }
}

TEST(advi_config, validation) {
  advi_config c;
  EXPECT_NO_THROW(c.validate());
  c.grad_samples = 0;
  EXPECT_THROW(c.validate(), advi::config_error);
  c = {};
  c.threshold = 0.0;
  EXPECT_THROW(c.validate(), advi::config_error);
  c = {};
  c.window = 0;
  EXPECT_THROW(c.validate(), advi::config_error);
  const auto pe = advi::make_model("poisson_exponential");
  dataset d;
  d.set_ints("x", {1, 2});
  c = {};
  c.minibatch = 3;
  EXPECT_THROW(advi::run_advi(*pe, d, c), advi::config_error);
  c.minibatch = 1;
  EXPECT_THROW(advi::run_advi(*toy(), {}, c), advi::config_error);
}

TEST(run_advi, zero_budget_returns_init) {
  advi_config c;
  c.max_iterations = 0;
  const auto r = advi::run_advi(*toy(3), {}, c);
  EXPECT_EQ(r.params.mu, std::vector<double>(3, 0.0));
  EXPECT_EQ(r.params.omega, std::vector<double>(3, 0.0));
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.iterations, 0u);
  c.init = advi::init_mode::gaussian;
  const auto g = advi::run_advi(*toy(3), {}, c);
  EXPECT_NE(g.params.mu, std::vector<double>(3, 0.0));
  EXPECT_EQ(g.params.omega, std::vector<double>(3, 0.0));
}

TEST(run_advi, reproducible_and_trace_ordered) {
  const auto f = advi::test::zoo_fixture("linreg_ard");
  advi_config c;
  c.max_iterations = 600;
  c.seed = 12;
  const auto a = advi::run_advi(*f.m, f.data, c);
  const auto b = advi::run_advi(*f.m, f.data, c);
  EXPECT_EQ(a.params.mu, b.params.mu);
  EXPECT_EQ(a.params.omega, b.params.omega);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].elbo, b.trace[i].elbo);
    if (i > 0) {
      EXPECT_GT(a.trace[i].iteration, a.trace[i - 1].iteration);
    }
  }
  c.seed = 13;
  EXPECT_NE(advi::run_advi(*f.m, f.data, c).params.mu, a.params.mu);
}

TEST(run_advi, full_batch_minibatch_is_bit_identical) {
  const auto f = advi::test::zoo_fixture("gmm");
  advi_config c;
  c.max_iterations = 300;
  c.grad_samples = 2;
  const auto plain = advi::run_advi(*f.m, f.data, c);
  c.minibatch = f.m->num_observations(f.data);
  const auto batched = advi::run_advi(*f.m, f.data, c);
  EXPECT_EQ(plain.params.mu, batched.params.mu);
  EXPECT_EQ(plain.params.omega, batched.params.omega);
  ASSERT_EQ(plain.trace.size(), batched.trace.size());
  for (std::size_t i = 0; i < plain.trace.size(); ++i)
    EXPECT_EQ(plain.trace[i].elbo, batched.trace[i].elbo);
}

TEST(run_advi, minibatch_model_default_is_used) {
  const auto f = advi::test::zoo_fixture("gmm_minibatch");
  EXPECT_EQ(f.m->default_batch_size(), std::optional<std::size_t>(5));
  advi_config c;
  c.max_iterations = 200;
  const auto r = advi::run_advi(*f.m, f.data, c);
  EXPECT_EQ(r.iterations, 200u);
  for (double w : r.params.omega) EXPECT_TRUE(std::isfinite(w));
}

TEST(run_advi, threads_do_not_change_results) {
  const auto f = advi::test::zoo_fixture("poisson_exponential");
  advi_config c;
  c.max_iterations = 200;
  c.grad_samples = 5;
  const auto one = advi::run_advi(*f.m, f.data, c);
  c.threads = 3;
  const auto three = advi::run_advi(*f.m, f.data, c);
  EXPECT_EQ(one.params.mu, three.params.mu);
  EXPECT_EQ(one.params.omega, three.params.omega);
}

TEST(run_advi, omega_is_clamped_and_counted) {
  advi_config c;
  c.max_iterations = 300;
  c.omega_bound = 0.01;
  const auto r = advi::run_advi(*toy(2), {}, c);
  EXPECT_GT(r.clamp_events, 0u);
  for (double w : r.params.omega) EXPECT_LE(std::abs(w), 0.01);
}

TEST(run_advi, converges_on_the_conjugate_poisson_model) {
  const auto pe = advi::make_model("poisson_exponential");
  dataset d;
  d.set_ints("x", {3, 5});
  const auto r = advi::run_advi(*pe, d, advi_config{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.iterations, advi_config{}.max_iterations);
  const std::size_t n = r.trace.size();
  ASSERT_GE(n, 2u);
  EXPECT_LT(advi::relative_change(r.trace[n - 2].elbo, r.trace[n - 1].elbo),
            0.01);
}

TEST(run_advi, evaluation_failure_reports_iteration_and_params) {
  broken bad;
  try {
    advi::run_advi(bad, {}, advi_config{});
    FAIL() << "expected an evaluation error";
  } catch (const advi::evaluation_error& e) {
    EXPECT_EQ(e.iteration(), 1u);
    EXPECT_EQ(e.mu().size(), 1u);
    EXPECT_NE(std::string(e.what()).find("at iteration 1"), std::string::npos);
  }
}

TEST(draw_posterior, spec_examples) {
  const auto pe = advi::make_model("poisson_exponential");
  const auto near_point =
      advi::draw_posterior(*pe, {{0.0}, {-20.0}}, 3, random_stream(0));
  ASSERT_EQ(near_point.rows.size(), 3u);
  for (const auto& row : near_point.rows) EXPECT_NEAR(row[0], 1.0, 1e-8);

  const auto g = advi::make_model("gmm", {}, {{"K", 4}, {"D", 1}});
  variational_params p = variational_params::zeros(g->dim());
  for (double& w : p.omega) w = 1.5;
  const auto draws = advi::draw_posterior(*g, p, 500, random_stream(1));
  for (const auto& row : draws.rows) {
    EXPECT_NEAR(row[0] + row[1] + row[2] + row[3], 1.0, 1e-12);
    EXPECT_TRUE(g->in_support(row));
  }

  const auto once = advi::draw_posterior(*g, p, 1, random_stream(2));
  const auto again = advi::draw_posterior(*g, p, 1, random_stream(2));
  EXPECT_EQ(once.rows, again.rows);
  EXPECT_EQ(once.columns, g->column_names());
}

TEST(random_stream, substreams_are_distinct_and_stable) {
  const random_stream root(42);
  EXPECT_NE(root.child(1).key(), root.child(2).key());
  EXPECT_EQ(root.child(1).key(), random_stream(42).child(1).key());
  auto e1 = root.engine(1, 2, 3);
  auto e2 = root.engine(1, 2, 3);
  auto e3 = root.engine(1, 3, 2);
  EXPECT_EQ(e1(), e2());
  EXPECT_NE(root.engine(1, 2, 3)(), e3());
}

}  // namespace

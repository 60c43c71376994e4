#ifndef ADVI_MODELS_HIER_LOGISTIC_HPP
#define ADVI_MODELS_HIER_LOGISTIC_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

#include <array>

namespace advi::models {

/**
 * Hierarchical logistic regression over age, education, their interaction,
 * state and region groups plus five fixed effects:
 *
 *   y_hat[n] = beta1 + beta2 black + beta3 female + beta5 female black
 *            + beta4 v_prev + a[age] + b[edu] + c[age_edu] + d[state]
 *            + e[region_full]
 *   a ~ normal(0, sigma_a), ..., e ~ normal(0, sigma_e)
 *   beta ~ normal(0, beta_scale)
 *   sigma_* ~ uniform(0, sigma_upper)
 *   y[n] ~ bernoulli_logit(y_hat[n])
 *
 * Data: N; group counts n_age, n_edu, n_age_edu, n_state, n_region_full;
 * 1-based integer index arrays age, edu, age_edu, state, region_full; real
 * arrays black, female, v_prev_full; integer 0/1 array y.
 */
class hier_logistic : public model_base<hier_logistic> {
 public:
  static constexpr std::array<const char*, 5> group_counts = {
      "n_age", "n_edu", "n_age_edu", "n_state", "n_region_full"};
  static constexpr std::array<const char*, 5> group_indices = {
      "age", "edu", "age_edu", "state", "region_full"};

  hier_logistic(std::map<std::string, double> hypers,
                std::map<std::string, long long> dims)
      : model_base("hier_logistic", make_blocks(dims, hypers),
                   hypers, dims),
        beta_scale_(hyperparameters().at("beta_scale")),
        sigma_upper_(hyperparameters().at("sigma_upper")) {}

  std::size_t num_observations(const dataset& data) const override {
    return data.reals("y").size();
  }

  void validate(const dataset& data) const override {
    const std::size_t n = data.reals("y").size();
    expect_dim(data, "N", static_cast<long long>(n), name());
    for (std::size_t g = 0; g < 5; ++g) {
      const long long count = dims().at(group_counts[g]);
      expect_dim(data, group_counts[g], count, name());
      expect_shape(data, group_indices[g], {n}, name());
      expect_integers_in(data, group_indices[g], 1, count, name());
    }
    for (const char* c : {"black", "female", "v_prev_full"})
      expect_shape(data, c, {n}, name());
    expect_shape(data, "y", {n}, name());
    expect_integers_in(data, "y", 0, 1, name());
  }

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    std::vector<T> terms;
    for (std::size_t g = 0; g < 5; ++g) {
      const T& scale = v.scalar(6 + g);
      for (const T& x : v[g]) terms.push_back(normal_lpdf(x, 0.0, scale));
      terms.push_back(uniform_lpdf(scale, 0.0, sigma_upper_));
    }
    for (const T& b : v[5]) terms.push_back(normal_lpdf(b, 0.0, beta_scale_));
    return sum(std::span<const T>(terms));
  }

  template <typename T>
  void log_likelihood(const block_values<T>& v, const dataset& data,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    if (obs.empty()) return;
    std::array<std::span<const long long>, 5> index;
    for (std::size_t g = 0; g < 5; ++g)
      index[g] = data.integers(group_indices[g]);
    const std::span<const double> black = data.reals("black");
    const std::span<const double> female = data.reals("female");
    const std::span<const double> v_prev = data.reals("v_prev_full");
    const std::span<const long long> y = data.integers("y");
    const std::span<const T> beta = v[5];

    std::array<T, 6> parts;
    for (std::size_t n : obs) {
      const std::array<double, 5> covariates = {
          1.0, black[n], female[n], v_prev[n], female[n] * black[n]};
      parts[0] = dot(std::span<const double>(covariates), beta);
      for (std::size_t g = 0; g < 5; ++g)
        parts[g + 1] = v[g][static_cast<std::size_t>(index[g][n] - 1)];
      terms.push_back(
          bernoulli_logit_lpmf(y[n], sum(std::span<const T>(parts))));
    }
  }

 private:
  static std::vector<block_spec> make_blocks(
      const std::map<std::string, long long>& dims,
      const std::map<std::string, double>& hypers) {
    const double upper = hypers.at("sigma_upper");
    std::vector<block_spec> blocks;
    const std::array<const char*, 5> names = {"a", "b", "c", "d", "e"};
    for (std::size_t g = 0; g < 5; ++g)
      blocks.push_back(block_spec::vector(
          names[g], transform_kind::identity(to_size(dims, group_counts[g]))));
    blocks.push_back(block_spec::vector("beta", transform_kind::identity(5)));
    for (std::size_t g = 0; g < 5; ++g)
      blocks.push_back(block_spec::scalar(
          std::string("sigma_") + names[g],
          transform_kind::interval(0.0, upper, 1)));
    return blocks;
  }

  double beta_scale_;
  double sigma_upper_;
};

}  // namespace advi::models

#endif

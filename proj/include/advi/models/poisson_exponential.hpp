#ifndef ADVI_MODELS_POISSON_EXPONENTIAL_HPP
#define ADVI_MODELS_POISSON_EXPONENTIAL_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

namespace advi::models {

/**
 * Poisson counts with an unknown positive rate under an exponential prior:
 *
 *   lambda ~ exponential(rate),  x[n] ~ poisson(lambda).
 *
 * Data: integer array `x` (optional; absent means no observations) and an
 * optional `N` that must match its length.
 */
class poisson_exponential : public model_base<poisson_exponential> {
 public:
  poisson_exponential(std::map<std::string, double> hypers,
                      std::map<std::string, long long> dims)
      : model_base("poisson_exponential",
                   {block_spec::scalar("lambda",
                                       transform_kind::lower_bound(0.0, 1))},
                   hypers, dims),
        rate_(hyperparameters().at("rate")) {}

  std::size_t num_observations(const dataset& data) const override {
    return data.contains("x") ? data.reals("x").size() : 0;
  }

  void validate(const dataset& data) const override {
    if (!data.contains("x")) return;
    if (data.shape("x").size() != 1)
      throw shape_error(name() + ": data entry 'x' must be a flat array");
    expect_integers_in(data, "x", 0, std::numeric_limits<long long>::max(),
                       name());
    expect_dim(data, "N", static_cast<long long>(data.integers("x").size()),
               name());
  }

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    return exponential_lpdf(v.scalar(0), rate_);
  }

  template <typename T>
  void log_likelihood(const block_values<T>& v, const dataset& data,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    if (obs.empty()) return;
    const std::span<const long long> x = data.integers("x");
    const T& lambda = v.scalar(0);
    for (std::size_t n : obs) terms.push_back(poisson_lpmf(x[n], lambda));
  }

 private:
  double rate_;
};

}  // namespace advi::models

#endif

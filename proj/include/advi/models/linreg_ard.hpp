#ifndef ADVI_MODELS_LINREG_ARD_HPP
#define ADVI_MODELS_LINREG_ARD_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

namespace advi::models {

/**
 * Linear regression with automatic relevance determination:
 *
 *   alpha[i] ~ gamma(c0, d0)
 *   sigma2   ~ inv_gamma(a0, b0)
 *   w[i]     ~ normal(0, sqrt(sigma2 / alpha[i]))
 *   y[n]     ~ normal(x[n] . w, sqrt(sigma2))
 *
 * Data: real matrix `x` (N x D) and real vector `y` (N).
 */
class linreg_ard : public model_base<linreg_ard> {
 public:
  linreg_ard(std::map<std::string, double> hypers,
             std::map<std::string, long long> dims)
      : model_base(
            "linreg_ard",
            {block_spec::vector("w",
                                transform_kind::identity(to_size(dims, "D"))),
             block_spec::scalar("sigma2", transform_kind::lower_bound(0.0, 1)),
             block_spec::vector("alpha", transform_kind::lower_bound(
                                             0.0, to_size(dims, "D")))},
            hypers, dims),
        d_(to_size(this->dims(), "D")),
        a0_(hyperparameters().at("a0")),
        b0_(hyperparameters().at("b0")),
        c0_(hyperparameters().at("c0")),
        d0_(hyperparameters().at("d0")) {}

  std::size_t num_observations(const dataset& data) const override {
    return data.reals("y").size();
  }

  void validate(const dataset& data) const override {
    const std::size_t n = data.reals("y").size();
    expect_shape(data, "y", {n}, name());
    expect_shape(data, "x", {n, d_}, name());
    expect_dim(data, "N", static_cast<long long>(n), name());
    expect_dim(data, "D", static_cast<long long>(d_), name());
  }

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    const std::span<const T> w = v[0];
    const T& sigma2 = v.scalar(1);
    const std::span<const T> alpha = v[2];
    const T sigma = sqrt(sigma2);
    std::vector<T> terms;
    terms.reserve(2 * d_ + 1);
    terms.push_back(inv_gamma_lpdf(sigma2, a0_, b0_));
    for (std::size_t i = 0; i < d_; ++i) {
      terms.push_back(gamma_lpdf(alpha[i], c0_, d0_));
      terms.push_back(normal_lpdf(w[i], 0.0, sigma / sqrt(alpha[i])));
    }
    return sum(std::span<const T>(terms));
  }

  template <typename T>
  void log_likelihood(const block_values<T>& v, const dataset& data,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    if (obs.empty()) return;
    const std::span<const double> x = data.reals("x");
    const std::span<const double> y = data.reals("y");
    const std::span<const T> w = v[0];
    const T sigma = sqrt(v.scalar(1));
    for (std::size_t n : obs)
      terms.push_back(normal_lpdf(y[n], dot(x.subspan(n * d_, d_), w), sigma));
  }

 private:
  std::size_t d_;
  double a0_, b0_, c0_, d0_;
};

}  // namespace advi::models

#endif

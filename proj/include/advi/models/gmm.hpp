#ifndef ADVI_MODELS_GMM_HPP
#define ADVI_MODELS_GMM_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

namespace advi::models {

/**
 * Diagonal Gaussian mixture with the component assignments summed out:
 *
 *   theta ~ dirichlet(alpha0, ..., alpha0)
 *   mu[k, d] ~ normal(0, mu_sigma0)
 *   sigma[k, d] ~ lognormal(0, sigma_sigma0)
 *   log p(y[n]) = log_sum_exp_k(log theta[k] + sum_d log normal(y[n, d] | mu[k, d], sigma[k, d]))
 *
 * Data: real matrix `y` (N x D). The `gmm_minibatch` variant is the same
 * model carrying a default minibatch size B.
 */
class gmm : public model_base<gmm> {
 public:
  gmm(std::map<std::string, double> hypers,
      std::map<std::string, long long> dims, std::string name = "gmm")
      : model_base(std::move(name), make_blocks(dims), hypers,
                   dims),
        k_(to_size(dims, "K")),
        d_(to_size(dims, "D")),
        alpha_(k_, hyperparameters().at("alpha0")),
        mu_sigma0_(hyperparameters().at("mu_sigma0")),
        sigma_sigma0_(hyperparameters().at("sigma_sigma0")) {
    if (auto it = dims.find("B"); it != dims.end()) {
      if (it->second < 1) throw config_error("gmm: minibatch size B must be >= 1");
      set_default_batch_size(static_cast<std::size_t>(it->second));
    }
  }

  std::size_t num_observations(const dataset& data) const override {
    const auto& shape = data.shape("y");
    return shape.empty() ? 0 : shape[0];
  }

  void validate(const dataset& data) const override {
    const auto& shape = data.shape("y");
    if (shape.size() != 2 || shape[1] != d_)
      throw shape_error(name() + ": data entry 'y' must be an N x " +
                        std::to_string(d_) + " matrix");
    expect_dim(data, "N", static_cast<long long>(shape[0]), name());
    expect_dim(data, "D", static_cast<long long>(d_), name());
    expect_dim(data, "K", static_cast<long long>(k_), name());
  }

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    std::vector<T> terms;
    terms.push_back(dirichlet_lpdf(v[0], alpha_));
    for (const T& m : v[1]) terms.push_back(normal_lpdf(m, 0.0, mu_sigma0_));
    for (const T& s : v[2])
      terms.push_back(lognormal_lpdf(s, 0.0, sigma_sigma0_));
    return sum(std::span<const T>(terms));
  }

  template <typename T>
  void log_likelihood(const block_values<T>& v, const dataset& data,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    if (obs.empty()) return;
    const std::span<const double> y = data.reals("y");
    const std::span<const T> theta = v[0];
    const std::span<const T> mu = v[1];
    const std::span<const T> sigma = v[2];

    // Per-component constants: log theta[k] - sum_d log sigma[k, d] - D/2 log 2 pi.
    std::vector<T> offset(k_);
    std::vector<T> inv_sigma(k_ * d_);
    std::vector<T> parts;
    for (std::size_t k = 0; k < k_; ++k) {
      if (!(value_of(theta[k]) > 0.0))
        advi::detail::throw_domain("gmm", "mixture weight underflowed",
                                   value_of(theta[k]));
      parts.assign(1, log(theta[k]));
      for (std::size_t d = 0; d < d_; ++d) {
        const T& s = sigma[k * d_ + d];
        parts.push_back(-log(s));
        inv_sigma[k * d_ + d] = 1.0 / s;
      }
      offset[k] = sum(std::span<const T>(parts)) -
                  static_cast<double>(d_) * advi::detail::half_log_two_pi;
    }

    std::vector<T> squares(d_);
    std::vector<T> components(k_);
    for (std::size_t n : obs) {
      for (std::size_t k = 0; k < k_; ++k) {
        for (std::size_t d = 0; d < d_; ++d) {
          const T z = (y[n * d_ + d] - mu[k * d_ + d]) * inv_sigma[k * d_ + d];
          squares[d] = z * z;
        }
        components[k] = offset[k] - 0.5 * sum(std::span<const T>(squares));
      }
      terms.push_back(log_sum_exp(std::span<const T>(components)));
    }
  }

 private:
  static std::vector<block_spec> make_blocks(
      const std::map<std::string, long long>& dims) {
    const std::size_t k = to_size(dims, "K");
    const std::size_t d = to_size(dims, "D");
    return {block_spec::vector("theta", transform_kind::simplex(k)),
            block_spec::array("mu", k, transform_kind::identity(d)),
            block_spec::array("sigma", k, transform_kind::lower_bound(0.0, d))};
  }

  std::size_t k_;
  std::size_t d_;
  std::vector<double> alpha_;
  double mu_sigma0_;
  double sigma_sigma0_;
};

}  // namespace advi::models

#endif

#ifndef ADVI_MODELS_NMF_HPP
#define ADVI_MODELS_NMF_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

namespace advi::models {

namespace detail {

// Shared data layout and Poisson likelihood of the two factorization models:
// integer matrix y (U x I), y[u, i] ~ poisson(theta[u] . beta[i]). Each cell
// is one observation, numbered n = u * I + i.
template <class Derived>
class poisson_factorization : public model_base<Derived> {
 public:
  std::size_t num_observations(const dataset& data) const override {
    return data.reals("y").size();
  }

  void validate(const dataset& data) const override {
    expect_shape(data, "y", {users_, items_}, this->name());
    expect_integers_in(data, "y", 0, std::numeric_limits<long long>::max(),
                       this->name());
    expect_dim(data, "U", static_cast<long long>(users_), this->name());
    expect_dim(data, "I", static_cast<long long>(items_), this->name());
    expect_dim(data, "K", static_cast<long long>(factors_), this->name());
  }

  template <typename T>
  void log_likelihood(const block_values<T>& v, const dataset& data,
                      std::span<const std::size_t> obs,
                      std::vector<T>& terms) const {
    if (obs.empty()) return;
    const std::span<const long long> y = data.integers("y");
    for (std::size_t n : obs) {
      const std::size_t u = n / items_;
      const std::size_t i = n % items_;
      terms.push_back(poisson_lpmf(y[n], dot(v.row(0, u), v.row(1, i))));
    }
  }

 protected:
  poisson_factorization(std::string name, transform_kind user_kind,
                        std::map<std::string, double> hypers,
                        std::map<std::string, long long> dims)
      : model_base<Derived>(
            std::move(name),
            {block_spec::array("theta", to_size(dims, "U"), user_kind),
             block_spec::array("beta", to_size(dims, "I"),
                               transform_kind::lower_bound(
                                   0.0, to_size(dims, "K")))},
            hypers, dims),
        users_(to_size(dims, "U")),
        items_(to_size(dims, "I")),
        factors_(to_size(dims, "K")) {}

  std::size_t users_;
  std::size_t items_;
  std::size_t factors_;
};

}  // namespace detail

/**
 * Gamma-Poisson factorization. Each user vector is constrained to be
 * positive and ordered to remove the scale ambiguity between factors.
 *
 *   theta[u, k] ~ gamma(a, b),  beta[i, k] ~ gamma(c, d)
 */
class gamma_poisson_nmf
    : public detail::poisson_factorization<gamma_poisson_nmf> {
 public:
  gamma_poisson_nmf(std::map<std::string, double> hypers,
                    std::map<std::string, long long> dims)
      : poisson_factorization(
            "gamma_poisson_nmf",
            transform_kind::positive_ordered(to_size(dims, "K")),
            hypers, dims),
        a_(hyperparameters().at("a")),
        b_(hyperparameters().at("b")),
        c_(hyperparameters().at("c")),
        d_(hyperparameters().at("d")) {}

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    std::vector<T> terms;
    terms.reserve(v[0].size() + v[1].size());
    for (const T& t : v[0]) terms.push_back(gamma_lpdf(t, a_, b_));
    for (const T& b : v[1]) terms.push_back(gamma_lpdf(b, c_, d_));
    return sum(std::span<const T>(terms));
  }

 private:
  double a_, b_, c_, d_;
};

/**
 * Dirichlet-exponential factorization: each user vector lives on the
 * simplex, item weights are exponential.
 *
 *   theta[u] ~ dirichlet(alpha0, ..., alpha0),  beta[i, k] ~ exponential(lambda0)
 */
class dirichlet_exponential_nmf
    : public detail::poisson_factorization<dirichlet_exponential_nmf> {
 public:
  dirichlet_exponential_nmf(std::map<std::string, double> hypers,
                            std::map<std::string, long long> dims)
      : poisson_factorization("dirichlet_exponential_nmf",
                              transform_kind::simplex(to_size(dims, "K")),
                              hypers, dims),
        alpha_(factors_, hyperparameters().at("alpha0")),
        lambda0_(hyperparameters().at("lambda0")) {}

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    std::vector<T> terms;
    for (std::size_t u = 0; u < users_; ++u)
      terms.push_back(dirichlet_lpdf(v.row(0, u), alpha_));
    for (const T& b : v[1]) terms.push_back(exponential_lpdf(b, lambda0_));
    return sum(std::span<const T>(terms));
  }

 private:
  std::vector<double> alpha_;
  double lambda0_;
};

}  // namespace advi::models

#endif

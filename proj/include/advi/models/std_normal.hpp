#ifndef ADVI_MODELS_STD_NORMAL_HPP
#define ADVI_MODELS_STD_NORMAL_HPP

#include <advi/densities.hpp>
#include <advi/model.hpp>
#include <advi/models/common.hpp>

namespace advi::models {

// theta ~ normal(0, 1) in D dimensions, no data. The exact posterior is the
// prior, so the optimal mean-field fit is mu = 0, omega = 0.
class std_normal : public model_base<std_normal> {
 public:
  std_normal(std::map<std::string, double> hypers,
             std::map<std::string, long long> dims)
      : model_base("std_normal",
                   {block_spec::vector(
                       "theta", transform_kind::identity(to_size(dims, "D")))},
                   hypers, dims) {}

  bool supports_subsampling() const override { return false; }
  std::size_t num_observations(const dataset&) const override { return 0; }
  void validate(const dataset&) const override {}

  template <typename T>
  T log_prior(const block_values<T>& v) const {
    std::vector<T> terms;
    for (const T& x : v[0]) terms.push_back(normal_lpdf(x, 0.0, 1.0));
    return sum(std::span<const T>(terms));
  }

  template <typename T>
  void log_likelihood(const block_values<T>&, const dataset&,
                      std::span<const std::size_t>, std::vector<T>&) const {}
};

}  // namespace advi::models

#endif

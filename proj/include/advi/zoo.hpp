#ifndef ADVI_ZOO_HPP
#define ADVI_ZOO_HPP

#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/model.hpp>
#include <advi/models/gmm.hpp>
#include <advi/models/hier_logistic.hpp>
#include <advi/models/linreg_ard.hpp>
#include <advi/models/nmf.hpp>
#include <advi/models/poisson_exponential.hpp>
#include <advi/models/std_normal.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace advi {

using hyper_map = std::map<std::string, double>;
using dim_map = std::map<std::string, long long>;

namespace detail {

struct zoo_entry {
  hyper_map default_hypers;
  dim_map default_dims;
  std::vector<std::string> required_dims;
  std::function<std::unique_ptr<model>(hyper_map, dim_map)> build;
};

template <class M>
std::function<std::unique_ptr<model>(hyper_map, dim_map)> builder() {
  return [](hyper_map h, dim_map d) -> std::unique_ptr<model> {
    return std::make_unique<M>(std::move(h), std::move(d));
  };
}

inline const std::map<std::string, zoo_entry>& zoo() {
  static const std::map<std::string, zoo_entry> entries = {
      {"std_normal", {{}, {{"D", 1}}, {"D"}, builder<models::std_normal>()}},
      {"poisson_exponential",
       {{{"rate", 1.0}}, {}, {}, builder<models::poisson_exponential>()}},
      {"linreg_ard",
       {{{"a0", 1.0}, {"b0", 1.0}, {"c0", 1.0}, {"d0", 1.0}},
        {},
        {"D"},
        builder<models::linreg_ard>()}},
      {"hier_logistic",
       {{{"beta_scale", 100.0}, {"sigma_upper", 100.0}},
        {},
        {"n_age", "n_edu", "n_age_edu", "n_state", "n_region_full"},
        builder<models::hier_logistic>()}},
      {"gamma_poisson_nmf",
       {{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 1.0}},
        {{"K", 10}},
        {"U", "I", "K"},
        builder<models::gamma_poisson_nmf>()}},
      {"dirichlet_exponential_nmf",
       {{{"alpha0", 1000.0}, {"lambda0", 0.1}},
        {{"K", 10}},
        {"U", "I", "K"},
        builder<models::dirichlet_exponential_nmf>()}},
      {"gmm",
       {{{"alpha0", 10000.0}, {"mu_sigma0", 0.1}, {"sigma_sigma0", 0.1}},
        {{"K", 10}},
        {"K", "D"},
        builder<models::gmm>()}},
      {"gmm_minibatch",
       {{{"alpha0", 10000.0}, {"mu_sigma0", 0.1}, {"sigma_sigma0", 0.1}},
        {{"K", 10}},
        {"K", "D", "B"},
        [](hyper_map h, dim_map d) -> std::unique_ptr<model> {
          return std::make_unique<models::gmm>(std::move(h), std::move(d),
                                               "gmm_minibatch");
        }}},
  };
  return entries;
}

}  // namespace detail

/** Identifiers accepted by make_model. */
inline std::vector<std::string> zoo_models() {
  std::vector<std::string> names;
  for (const auto& [name, entry] : detail::zoo()) names.push_back(name);
  return names;
}

/**
 * Builds a zoo model. Hyperparameters and dimensions not given take the
 * model's defaults; unknown names, missing dimensions and non-positive
 * values raise config_error.
 */
inline std::unique_ptr<model> make_model(const std::string& name,
                                         const hyper_map& hypers = {},
                                         const dim_map& dims = {}) {
  const auto& zoo = detail::zoo();
  auto it = zoo.find(name);
  if (it == zoo.end()) throw config_error("unknown model: " + name);
  const detail::zoo_entry& entry = it->second;

  hyper_map h = entry.default_hypers;
  for (const auto& [key, value] : hypers) {
    if (h.count(key) == 0)
      throw config_error(name + ": unknown hyperparameter '" + key + "'");
    if (!(value > 0.0) || !std::isfinite(value))
      throw config_error(name + ": hyperparameter '" + key +
                         "' must be positive");
    h[key] = value;
  }

  dim_map d = entry.default_dims;
  for (const auto& [key, value] : dims) d[key] = value;
  for (const std::string& key : entry.required_dims) {
    auto dit = d.find(key);
    if (dit == d.end())
      throw config_error(name + ": missing dimension '" + key + "'");
    if (dit->second < 1)
      throw config_error(name + ": dimension '" + key + "' must be >= 1");
  }
  return entry.build(std::move(h), std::move(d));
}

/**
 * Dimensions for `name` read from integer scalars in the data (the data file
 * declares N, D, K, U, I and the group counts the way the model code reads
 * them), overridden by `overrides`.
 */
inline dim_map infer_dims(const std::string& name, const dataset& data,
                          const dim_map& overrides = {}) {
  const auto& zoo = detail::zoo();
  auto it = zoo.find(name);
  if (it == zoo.end()) throw config_error("unknown model: " + name);
  dim_map d;
  for (const std::string& key : it->second.required_dims)
    if (data.contains(key) && data.at(key).integer && data.shape(key).empty())
      d[key] = data.integer(key);
  if (!d.count("D") && data.contains("y") && data.shape("y").size() == 2 &&
      (name == "gmm" || name == "gmm_minibatch"))
    d["D"] = static_cast<long long>(data.shape("y")[1]);
  if (!d.count("D") && name == "linreg_ard" && data.contains("x") &&
      data.shape("x").size() == 2)
    d["D"] = static_cast<long long>(data.shape("x")[1]);
  if (data.contains("y") && data.shape("y").size() == 2 &&
      (name == "gamma_poisson_nmf" || name == "dirichlet_exponential_nmf")) {
    if (!d.count("U")) d["U"] = static_cast<long long>(data.shape("y")[0]);
    if (!d.count("I")) d["I"] = static_cast<long long>(data.shape("y")[1]);
  }
  for (const auto& [key, value] : overrides) d[key] = value;
  return d;
}

}  // namespace advi

#endif

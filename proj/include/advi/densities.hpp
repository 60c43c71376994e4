#ifndef ADVI_DENSITIES_HPP
#define ADVI_DENSITIES_HPP

#include <advi/autodiff.hpp>
#include <advi/errors.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Log densities and log masses with all normalizing constants. Every argument
// may be a double or a var; the result is a var as soon as one argument is.

namespace advi {

namespace detail {

inline constexpr double half_log_two_pi = 0.91893853320467274178;

inline void check_finite(const char* function, const char* name, double x) {
  if (!std::isfinite(x))
    throw_domain(function, (std::string(name) + " must be finite").c_str(), x);
}

inline void check_positive(const char* function, const char* name, double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw_domain(function,
                 (std::string(name) + " must be positive and finite").c_str(),
                 x);
}

}  // namespace detail

template <typename Ty, typename Tm, typename Ts>
scalar_result_t<Ty, Tm, Ts> normal_lpdf(const Ty& y, const Tm& mu,
                                        const Ts& sigma) {
  using R = scalar_result_t<Ty, Tm, Ts>;
  detail::check_finite("normal_lpdf", "value", value_of(y));
  detail::check_finite("normal_lpdf", "location", value_of(mu));
  detail::check_positive("normal_lpdf", "scale", value_of(sigma));
  const R z = (R(y) - mu) / sigma;
  return -0.5 * z * z - log(sigma) - detail::half_log_two_pi;
}

template <typename Ty, typename Tm, typename Ts>
scalar_result_t<Ty, Tm, Ts> lognormal_lpdf(const Ty& y, const Tm& mu,
                                           const Ts& sigma) {
  detail::check_positive("lognormal_lpdf", "value", value_of(y));
  detail::check_finite("lognormal_lpdf", "location", value_of(mu));
  detail::check_positive("lognormal_lpdf", "scale", value_of(sigma));
  const auto log_y = log(y);
  return normal_lpdf(log_y, mu, sigma) - log_y;
}

/** Gamma with shape/rate parameterization. */
template <typename Ty, typename Ta, typename Tb>
scalar_result_t<Ty, Ta, Tb> gamma_lpdf(const Ty& y, const Ta& shape,
                                       const Tb& rate) {
  using R = scalar_result_t<Ty, Ta, Tb>;
  detail::check_positive("gamma_lpdf", "value", value_of(y));
  detail::check_positive("gamma_lpdf", "shape", value_of(shape));
  detail::check_positive("gamma_lpdf", "rate", value_of(rate));
  return R(shape) * log(rate) - log_gamma(shape) + (R(shape) - 1.0) * log(y) -
         R(rate) * y;
}

/** Inverse gamma with shape/scale parameterization. */
template <typename Ty, typename Ta, typename Tb>
scalar_result_t<Ty, Ta, Tb> inv_gamma_lpdf(const Ty& y, const Ta& shape,
                                           const Tb& scale) {
  using R = scalar_result_t<Ty, Ta, Tb>;
  detail::check_positive("inv_gamma_lpdf", "value", value_of(y));
  detail::check_positive("inv_gamma_lpdf", "shape", value_of(shape));
  detail::check_positive("inv_gamma_lpdf", "scale", value_of(scale));
  return R(shape) * log(scale) - log_gamma(shape) -
         (R(shape) + 1.0) * log(y) - R(scale) / y;
}

template <typename Ty, typename Tr>
scalar_result_t<Ty, Tr> exponential_lpdf(const Ty& y, const Tr& rate) {
  using R = scalar_result_t<Ty, Tr>;
  if (!(value_of(y) >= 0.0) || !std::isfinite(value_of(y)))
    detail::throw_domain("exponential_lpdf", "value must be nonnegative",
                         value_of(y));
  detail::check_positive("exponential_lpdf", "rate", value_of(rate));
  return log(rate) - R(rate) * y;
}

template <typename Ty, typename Ta, typename Tb>
scalar_result_t<Ty, Ta, Tb> uniform_lpdf(const Ty& y, const Ta& lower,
                                         const Tb& upper) {
  using R = scalar_result_t<Ty, Ta, Tb>;
  if (!(value_of(lower) < value_of(upper)))
    detail::throw_domain("uniform_lpdf", "lower bound must be below upper",
                         value_of(lower));
  if (!(value_of(y) >= value_of(lower) && value_of(y) <= value_of(upper)))
    detail::throw_domain("uniform_lpdf", "value outside [lower, upper]",
                         value_of(y));
  return -log(R(upper) - lower);
}

/**
 * Dirichlet log density of a point on the simplex. Each component of theta
 * must be positive and the components must sum to one (within 1e-8).
 */
template <std::ranges::random_access_range Theta,
          std::ranges::random_access_range Alpha>
scalar_result_t<std::ranges::range_value_t<Theta>,
                std::ranges::range_value_t<Alpha>>
dirichlet_lpdf(const Theta& theta, const Alpha& alpha) {
  using R = scalar_result_t<std::ranges::range_value_t<Theta>,
                            std::ranges::range_value_t<Alpha>>;
  const std::size_t n = std::ranges::size(theta);
  if (n != std::ranges::size(alpha))
    throw shape_error("dirichlet_lpdf: theta and alpha lengths differ");
  if (n < 2) throw shape_error("dirichlet_lpdf: needs at least 2 components");
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    detail::check_positive("dirichlet_lpdf", "concentration",
                           value_of(alpha[k]));
    if (!(value_of(theta[k]) > 0.0))
      detail::throw_domain("dirichlet_lpdf", "simplex component must be positive",
                           value_of(theta[k]));
    total += value_of(theta[k]);
  }
  if (std::abs(total - 1.0) > 1e-8)
    detail::throw_domain("dirichlet_lpdf", "value must sum to one", total);

  std::vector<R> terms;
  terms.reserve(2 * n + 1);
  std::vector<R> alphas(alpha.begin(), alpha.end());
  terms.push_back(log_gamma(sum(std::span<const R>(alphas))));
  for (std::size_t k = 0; k < n; ++k) {
    terms.push_back(-log_gamma(alphas[k]));
    terms.push_back((alphas[k] - 1.0) * log(R(theta[k])));
  }
  return sum(std::span<const R>(terms));
}

template <typename Tl>
Tl poisson_lpmf(long long count, const Tl& rate) {
  if (count < 0)
    detail::throw_domain("poisson_lpmf", "count must be nonnegative",
                         static_cast<double>(count));
  detail::check_positive("poisson_lpmf", "rate", value_of(rate));
  const double log_factorial = std::lgamma(static_cast<double>(count) + 1.0);
  if (count == 0) return -rate;
  return static_cast<double>(count) * log(rate) - rate - log_factorial;
}

/** log Bernoulli(outcome | logistic(eta)). */
template <typename Te>
Te bernoulli_logit_lpmf(long long outcome, const Te& eta) {
  if (outcome != 0 && outcome != 1)
    detail::throw_domain("bernoulli_logit_lpmf", "outcome must be 0 or 1",
                         static_cast<double>(outcome));
  detail::check_finite("bernoulli_logit_lpmf", "logit", value_of(eta));
  return outcome == 1 ? Te(-log1p_exp(-eta)) : Te(-log1p_exp(eta));
}

/**
 * Looks a density up by name. `values` holds the argument (one entry, or the
 * simplex point for dirichlet); `params` holds the parameters in the order of
 * the named function above (for dirichlet, the concentrations).
 */
template <typename T>
T log_density(std::string_view name, std::span<const T> values,
              std::span<const T> params) {
  auto need = [&](std::size_t nv, std::size_t np) {
    if (values.size() != nv || params.size() != np)
      throw shape_error(std::string(name) + ": expected " +
                        std::to_string(nv) + " value(s) and " +
                        std::to_string(np) + " parameter(s)");
  };
  auto as_count = [&](const T& x) {
    const double v = value_of(x);
    if (std::floor(v) != v)
      detail::throw_domain(std::string(name).c_str(),
                           "outcome must be an integer", v);
    return static_cast<long long>(v);
  };
  if (name == "normal") {
    need(1, 2);
    return normal_lpdf(values[0], params[0], params[1]);
  }
  if (name == "lognormal") {
    need(1, 2);
    return lognormal_lpdf(values[0], params[0], params[1]);
  }
  if (name == "gamma") {
    need(1, 2);
    return gamma_lpdf(values[0], params[0], params[1]);
  }
  if (name == "inv_gamma") {
    need(1, 2);
    return inv_gamma_lpdf(values[0], params[0], params[1]);
  }
  if (name == "exponential") {
    need(1, 1);
    return exponential_lpdf(values[0], params[0]);
  }
  if (name == "uniform") {
    need(1, 2);
    return uniform_lpdf(values[0], params[0], params[1]);
  }
  if (name == "dirichlet") {
    need(values.size(), values.size());
    return dirichlet_lpdf(values, params);
  }
  if (name == "poisson") {
    need(1, 1);
    return poisson_lpmf(as_count(values[0]), params[0]);
  }
  if (name == "bernoulli_logit") {
    need(1, 1);
    return bernoulli_logit_lpmf(as_count(values[0]), params[0]);
  }
  throw config_error("unknown distribution: " + std::string(name));
}

}  // namespace advi

#endif

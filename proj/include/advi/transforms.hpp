#ifndef ADVI_TRANSFORMS_HPP
#define ADVI_TRANSFORMS_HPP

#include <advi/autodiff.hpp>
#include <advi/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace advi {

/**
 * A bijection T from a constrained support onto the real coordinate space,
 * together with the log absolute Jacobian determinant of its inverse.
 *
 * Scalar kinds (identity and the bounds) act elementwise on `size` values.
 * Simplex, ordered and positive-ordered act on one vector of `size` values.
 */
class transform_kind {
 public:
  enum class type {
    identity,
    lower_bound,
    upper_bound,
    interval,
    simplex,
    ordered,
    positive_ordered
  };

  static transform_kind identity(std::size_t size) {
    return {type::identity, 0.0, 0.0, size};
  }
  static transform_kind lower_bound(double lower, std::size_t size) {
    return {type::lower_bound, lower, 0.0, size};
  }
  static transform_kind upper_bound(double upper, std::size_t size) {
    return {type::upper_bound, 0.0, upper, size};
  }
  static transform_kind interval(double lower, double upper,
                                 std::size_t size) {
    if (!(lower < upper))
      throw config_error("interval transform needs lower < upper");
    return {type::interval, lower, upper, size};
  }
  static transform_kind simplex(std::size_t size) {
    if (size < 2) throw config_error("simplex transform needs K >= 2");
    return {type::simplex, 0.0, 0.0, size};
  }
  static transform_kind ordered(std::size_t size) {
    if (size < 2) throw config_error("ordered transform needs K >= 2");
    return {type::ordered, 0.0, 0.0, size};
  }
  static transform_kind positive_ordered(std::size_t size) {
    if (size < 1)
      throw config_error("positive_ordered transform needs K >= 1");
    return {type::positive_ordered, 0.0, 0.0, size};
  }

  type kind() const noexcept { return type_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

  /** Number of constrained values. */
  std::size_t size() const noexcept { return size_; }

  /** Number of real coordinates; one fewer than size() for a simplex. */
  std::size_t unconstrained_size() const noexcept {
    return type_ == type::simplex ? size_ - 1 : size_;
  }

  std::string describe() const;

  /** Whether theta lies strictly inside the support (simplex sum within tol). */
  bool contains(std::span<const double> theta, double sum_tol = 1e-8) const;

 private:
  transform_kind(type t, double lower, double upper, std::size_t size)
      : type_(t), lower_(lower), upper_(upper), size_(size) {}

  type type_;
  double lower_;
  double upper_;
  std::size_t size_;
};

inline std::size_t unconstrained_dim(const transform_kind& kind) {
  return kind.unconstrained_size();
}

inline std::string transform_kind::describe() const {
  auto num = [](double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
  };
  const std::string n = std::to_string(size_);
  switch (type_) {
    case type::identity: return "identity(" + n + ")";
    case type::lower_bound: return "lower_bound(" + num(lower_) + ", " + n + ")";
    case type::upper_bound: return "upper_bound(" + num(upper_) + ", " + n + ")";
    case type::interval:
      return "interval(" + num(lower_) + ", " + num(upper_) + ", " + n + ")";
    case type::simplex: return "simplex(" + n + ")";
    case type::ordered: return "ordered(" + n + ")";
    case type::positive_ordered: return "positive_ordered(" + n + ")";
  }
  return "unknown";
}

inline bool transform_kind::contains(std::span<const double> theta,
                                     double sum_tol) const {
  if (theta.size() != size_) return false;
  for (double t : theta)
    if (!std::isfinite(t)) return false;
  switch (type_) {
    case type::identity: return true;
    case type::lower_bound:
      for (double t : theta)
        if (!(t > lower_)) return false;
      return true;
    case type::upper_bound:
      for (double t : theta)
        if (!(t < upper_)) return false;
      return true;
    case type::interval:
      for (double t : theta)
        if (!(t > lower_ && t < upper_)) return false;
      return true;
    case type::simplex: {
      double total = 0.0;
      for (double t : theta) {
        if (!(t > 0.0)) return false;
        total += t;
      }
      return std::abs(total - 1.0) <= sum_tol;
    }
    case type::positive_ordered:
      if (!(theta[0] > 0.0)) return false;
      [[fallthrough]];
    case type::ordered:
      for (std::size_t k = 1; k < theta.size(); ++k)
        if (!(theta[k] > theta[k - 1])) return false;
      return true;
  }
  return false;
}

/**
 * Applies T^{-1}: writes the constrained values for `zeta` into `theta` and
 * returns log|det J_{T^{-1}}(zeta)|.
 *
 * Works on doubles and on vars; with vars the gradient flows through both
 * the constrained values and the log determinant.
 */
template <typename T>
T constrain_into(const transform_kind& kind, std::span<const T> zeta,
                 std::span<T> theta) {
  using type = transform_kind::type;
  if (zeta.size() != kind.unconstrained_size())
    throw shape_error("constrain: expected " +
                      std::to_string(kind.unconstrained_size()) +
                      " unconstrained values for " + kind.describe() +
                      ", got " + std::to_string(zeta.size()));
  if (theta.size() != kind.size())
    throw shape_error("constrain: output has wrong length");

  std::vector<T> terms;
  switch (kind.kind()) {
    case type::identity:
      std::copy(zeta.begin(), zeta.end(), theta.begin());
      return T(0.0);
    case type::lower_bound:
      for (std::size_t k = 0; k < zeta.size(); ++k)
        theta[k] = kind.lower() + exp(zeta[k]);
      return sum(zeta);
    case type::upper_bound:
      for (std::size_t k = 0; k < zeta.size(); ++k)
        theta[k] = kind.upper() - exp(zeta[k]);
      return sum(zeta);
    case type::interval: {
      const double width = kind.upper() - kind.lower();
      const double log_width = std::log(width);
      terms.reserve(zeta.size());
      for (std::size_t k = 0; k < zeta.size(); ++k) {
        theta[k] = kind.lower() + width * logistic(zeta[k]);
        // log s + log(1 - s) = -softplus(-z) - softplus(z)
        terms.push_back(log_width - log1p_exp(-zeta[k]) - log1p_exp(zeta[k]));
      }
      return sum(std::span<const T>(terms));
    }
    case type::simplex: {
      // Stick-breaking with offset log(1 / (K - k)) so zeta = 0 is uniform.
      const std::size_t n = kind.size();
      T log_stick(0.0);
      T stick(1.0);
      terms.reserve(2 * (n - 1));
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double offset = -std::log(static_cast<double>(n - 1 - k));
        const T y = zeta[k] + offset;
        const T z = logistic(y);
        theta[k] = stick * z;
        const T log_one_minus_z = -log1p_exp(y);
        terms.push_back(-log1p_exp(-y) + log_one_minus_z);
        terms.push_back(log_stick);
        stick = stick - theta[k];
        log_stick = log_stick + log_one_minus_z;
      }
      theta[n - 1] = stick;
      return sum(std::span<const T>(terms));
    }
    case type::ordered:
      theta[0] = zeta[0];
      for (std::size_t k = 1; k < zeta.size(); ++k)
        theta[k] = theta[k - 1] + exp(zeta[k]);
      return sum(zeta.subspan(1));
    case type::positive_ordered:
      theta[0] = exp(zeta[0]);
      for (std::size_t k = 1; k < zeta.size(); ++k)
        theta[k] = theta[k - 1] + exp(zeta[k]);
      return sum(zeta);
  }
  throw std::logic_error("constrain: unknown transform");
}

template <typename T>
struct constrained {
  std::vector<T> value;
  T log_det;
};

template <typename T>
constrained<T> constrain(const transform_kind& kind, std::span<const T> zeta) {
  constrained<T> out{std::vector<T>(kind.size()), T(0.0)};
  out.log_det = constrain_into<T>(kind, zeta, out.value);
  return out;
}

inline constrained<double> constrain(const transform_kind& kind,
                                     const std::vector<double>& zeta) {
  return constrain<double>(kind, std::span<const double>(zeta));
}

/**
 * Applies T. `theta` must lie in the open support; anything on or outside
 * the boundary raises std::domain_error rather than being clamped.
 */
inline std::vector<double> unconstrain(const transform_kind& kind,
                                       std::span<const double> theta) {
  using type = transform_kind::type;
  if (theta.size() != kind.size())
    throw shape_error("unconstrain: expected " + std::to_string(kind.size()) +
                      " values for " + kind.describe() + ", got " +
                      std::to_string(theta.size()));
  if (!kind.contains(theta))
    throw std::domain_error("unconstrain: value outside the open support of " +
                            kind.describe());
  std::vector<double> zeta(kind.unconstrained_size());
  switch (kind.kind()) {
    case type::identity:
      std::copy(theta.begin(), theta.end(), zeta.begin());
      break;
    case type::lower_bound:
      for (std::size_t k = 0; k < theta.size(); ++k)
        zeta[k] = std::log(theta[k] - kind.lower());
      break;
    case type::upper_bound:
      for (std::size_t k = 0; k < theta.size(); ++k)
        zeta[k] = std::log(kind.upper() - theta[k]);
      break;
    case type::interval:
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double u = (theta[k] - kind.lower()) / (kind.upper() - kind.lower());
        zeta[k] = std::log(u) - std::log1p(-u);
      }
      break;
    case type::simplex: {
      const std::size_t n = kind.size();
      double stick = 1.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double z = theta[k] / stick;
        if (!(z > 0.0 && z < 1.0))
          throw std::domain_error("unconstrain: simplex stick exhausted");
        zeta[k] = std::log(z) - std::log1p(-z) +
                  std::log(static_cast<double>(n - 1 - k));
        stick -= theta[k];
      }
      break;
    }
    case type::ordered:
      zeta[0] = theta[0];
      for (std::size_t k = 1; k < theta.size(); ++k)
        zeta[k] = std::log(theta[k] - theta[k - 1]);
      break;
    case type::positive_ordered:
      zeta[0] = std::log(theta[0]);
      for (std::size_t k = 1; k < theta.size(); ++k)
        zeta[k] = std::log(theta[k] - theta[k - 1]);
      break;
  }
  return zeta;
}

inline std::vector<double> unconstrain(const transform_kind& kind,
                                       const std::vector<double>& theta) {
  return unconstrain(kind, std::span<const double>(theta));
}

}  // namespace advi

#endif

#ifndef ADVI_ERRORS_HPP
#define ADVI_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace advi {

/** Argument has the wrong length or a dataset entry has the wrong shape. */
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/** Unknown model, missing dimension or hyperparameter, bad run settings. */
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * The log joint (or its gradient) could not be evaluated to a finite value.
 *
 * When raised from the optimizer it carries the iteration at which the
 * failure became persistent and the variational parameters at that point.
 */
class evaluation_error : public std::runtime_error {
 public:
  explicit evaluation_error(const std::string& what)
      : std::runtime_error(what) {}

  evaluation_error(const std::string& what, std::size_t iteration,
                   std::vector<double> mu, std::vector<double> omega)
      : std::runtime_error(what),
        iteration_(iteration),
        mu_(std::move(mu)),
        omega_(std::move(omega)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::vector<double>& mu() const noexcept { return mu_; }
  const std::vector<double>& omega() const noexcept { return omega_; }

 private:
  std::size_t iteration_ = 0;
  std::vector<double> mu_;
  std::vector<double> omega_;
};

}  // namespace advi

#endif

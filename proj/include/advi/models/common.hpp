#ifndef ADVI_MODELS_COMMON_HPP
#define ADVI_MODELS_COMMON_HPP

#include <advi/dataset.hpp>
#include <advi/errors.hpp>

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace advi::models {

inline void expect_shape(const dataset& data, const std::string& name,
                         const std::vector<std::size_t>& shape,
                         const std::string& model) {
  if (data.shape(name) != shape) {
    std::string want;
    for (std::size_t s : shape) want += (want.empty() ? "" : "x") + std::to_string(s);
    throw shape_error(model + ": data entry '" + name + "' must have shape [" +
                      want + "]");
  }
}

inline void expect_integers_in(const dataset& data, const std::string& name,
                               long long lo, long long hi,
                               const std::string& model) {
  for (long long v : data.integers(name))
    if (v < lo || v > hi)
      throw shape_error(model + ": data entry '" + name + "' has value " +
                        std::to_string(v) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
}

/** When the data carries a dimension entry, it must agree with the model. */
inline void expect_dim(const dataset& data, const std::string& name,
                       long long value, const std::string& model) {
  if (data.contains(name) && data.integer(name) != value)
    throw shape_error(model + ": data entry '" + name + "' is " +
                      std::to_string(data.integer(name)) + ", model has " +
                      std::to_string(value));
}

inline std::size_t to_size(const std::map<std::string, long long>& dims,
                           const std::string& name) {
  return static_cast<std::size_t>(dims.at(name));
}

}  // namespace advi::models

#endif

#ifndef ADVI_DATASET_HPP
#define ADVI_DATASET_HPP

#include <advi/errors.hpp>

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace advi {

/**
 * Named numeric data: scalars, flat arrays and row-major matrices.
 *
 * Integer entries keep their integer values and also expose a real view, so
 * a model asking for reals accepts either; asking for integers requires an
 * integer entry.
 */
class dataset {
 public:
  struct entry {
    std::vector<std::size_t> shape;  // {} scalar, {n} array, {rows, cols}
    bool integer = false;
    std::vector<long long> ints;
    std::vector<double> reals;
  };

  void set_int(const std::string& name, long long value) {
    entries_[name] = entry{{}, true, {value}, {static_cast<double>(value)}};
  }

  void set_real(const std::string& name, double value) {
    entries_[name] = entry{{}, false, {}, {value}};
  }

  void set_ints(const std::string& name, std::vector<long long> values,
                std::vector<std::size_t> shape = {}) {
    if (shape.empty()) shape = {values.size()};
    check_shape(name, shape, values.size());
    entry e{std::move(shape), true, std::move(values), {}};
    e.reals.assign(e.ints.begin(), e.ints.end());
    entries_[name] = std::move(e);
  }

  void set_reals(const std::string& name, std::vector<double> values,
                 std::vector<std::size_t> shape = {}) {
    if (shape.empty()) shape = {values.size()};
    check_shape(name, shape, values.size());
    entries_[name] = entry{std::move(shape), false, {}, std::move(values)};
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) != 0;
  }

  const entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw shape_error("dataset: missing entry '" + name + "'");
    return it->second;
  }

  const std::vector<std::size_t>& shape(const std::string& name) const {
    return at(name).shape;
  }

  long long integer(const std::string& name) const {
    const entry& e = at(name);
    if (!e.integer || !e.shape.empty())
      throw shape_error("dataset: '" + name + "' must be an integer scalar");
    return e.ints[0];
  }

  double real(const std::string& name) const {
    const entry& e = at(name);
    if (!e.shape.empty())
      throw shape_error("dataset: '" + name + "' must be a scalar");
    return e.reals[0];
  }

  std::span<const long long> integers(const std::string& name) const {
    const entry& e = at(name);
    if (!e.integer)
      throw shape_error("dataset: '" + name + "' must hold integers");
    return e.ints;
  }

  std::span<const double> reals(const std::string& name) const {
    return at(name).reals;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  const std::map<std::string, entry>& entries() const { return entries_; }

 private:
  static void check_shape(const std::string& name,
                          const std::vector<std::size_t>& shape,
                          std::size_t count) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    if (shape.size() > 2 || n != count)
      throw shape_error("dataset: '" + name + "' has inconsistent shape");
  }

  std::map<std::string, entry> entries_;
};

namespace detail {

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline bool is_json_number(const nlohmann::json& j) {
  return j.is_number() && !j.is_boolean();
}

}  // namespace detail

/**
 * Builds a dataset from JSON text: an object whose values are numbers,
 * arrays of numbers, or arrays of equal-length arrays of numbers.
 */
inline dataset parse_dataset(const std::string& text,
                             const std::string& source = "<input>") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw config_error(source + ": parse error at " +
                       detail::line_column(text, byte));
  }
  if (!root.is_object())
    throw config_error(source + ": top level must be a JSON object");

  dataset data;
  for (const auto& [name, value] : root.items()) {
    auto bad = [&](const std::string& why) {
      return shape_error(source + ": entry '" + name + "' " + why);
    };
    if (detail::is_json_number(value)) {
      if (value.is_number_integer())
        data.set_int(name, value.get<long long>());
      else
        data.set_real(name, value.get<double>());
      continue;
    }
    if (!value.is_array()) throw bad("must be a number or an array");

    std::vector<const nlohmann::json*> flat;
    std::vector<std::size_t> shape;
    const bool nested = !value.empty() && value.front().is_array();
    if (nested) {
      const std::size_t cols = value.front().size();
      for (const auto& row : value) {
        if (!row.is_array()) throw bad("mixes arrays and numbers");
        if (row.size() != cols) throw bad("has ragged rows");
        for (const auto& x : row) flat.push_back(&x);
      }
      shape = {value.size(), cols};
    } else {
      for (const auto& x : value) flat.push_back(&x);
      shape = {value.size()};
    }

    bool all_integer = true;
    for (const nlohmann::json* x : flat) {
      if (!detail::is_json_number(*x))
        throw bad(x->is_array() ? "is nested more than two levels"
                                : "contains a non-numeric value");
      all_integer = all_integer && x->is_number_integer();
    }
    if (all_integer) {
      std::vector<long long> ints;
      ints.reserve(flat.size());
      for (const nlohmann::json* x : flat) ints.push_back(x->get<long long>());
      data.set_ints(name, std::move(ints), shape);
    } else {
      std::vector<double> reals;
      reals.reserve(flat.size());
      for (const nlohmann::json* x : flat) reals.push_back(x->get<double>());
      data.set_reals(name, std::move(reals), shape);
    }
  }
  return data;
}

inline dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path + ": cannot open data file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), path);
}

inline nlohmann::json to_json(const dataset& data) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& [name, e] : data.entries()) {
    auto item = [&](std::size_t i) -> nlohmann::json {
      if (e.integer) return e.ints[i];
      return e.reals[i];
    };
    if (e.shape.empty()) {
      root[name] = item(0);
    } else if (e.shape.size() == 1) {
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t i = 0; i < e.shape[0]; ++i) arr.push_back(item(i));
      root[name] = std::move(arr);
    } else {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < e.shape[0]; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < e.shape[1]; ++c)
          row.push_back(item(r * e.shape[1] + c));
        rows.push_back(std::move(row));
      }
      root[name] = std::move(rows);
    }
  }
  return root;
}

inline void save_dataset(const std::string& path, const dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << to_json(data).dump() << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace advi

#endif

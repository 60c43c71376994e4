#ifndef ADVI_MODEL_HPP
#define ADVI_MODEL_HPP

#include <advi/autodiff.hpp>
#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/transforms.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace advi {

enum class block_shape { scalar, vector, array };

/**
 * One named parameter block. An array block holds `rows` vectors, each
 * constrained by `kind` independently.
 */
struct block_spec {
  std::string name;
  transform_kind kind;
  block_shape shape;
  std::size_t rows = 1;

  static block_spec scalar(std::string name, transform_kind kind) {
    if (kind.size() != 1)
      throw config_error("scalar block '" + name + "' needs a size-1 kind");
    return {std::move(name), kind, block_shape::scalar, 1};
  }
  static block_spec vector(std::string name, transform_kind kind) {
    return {std::move(name), kind, block_shape::vector, 1};
  }
  static block_spec array(std::string name, std::size_t rows,
                          transform_kind kind) {
    return {std::move(name), kind, block_shape::array, rows};
  }

  std::size_t unconstrained_size() const {
    return rows * kind.unconstrained_size();
  }
  std::size_t constrained_size() const { return rows * kind.size(); }
};

/** Constrained values of every block, addressed by declaration index. */
template <typename T>
class block_values {
 public:
  block_values(const std::vector<block_spec>& specs)  // NOLINT
      : specs_(&specs), offset_(specs.size() + 1, 0) {
    for (std::size_t b = 0; b < specs.size(); ++b)
      offset_[b + 1] = offset_[b] + specs[b].constrained_size();
    data_.resize(offset_.back());
  }

  std::span<const T> operator[](std::size_t block) const {
    return {data_.data() + offset_[block], offset_[block + 1] - offset_[block]};
  }
  std::span<T> mutable_block(std::size_t block) {
    return {data_.data() + offset_[block], offset_[block + 1] - offset_[block]};
  }

  const T& scalar(std::size_t block) const { return data_[offset_[block]]; }

  /** Row r of an array block (or the whole vector for r = 0). */
  std::span<const T> row(std::size_t block, std::size_t r) const {
    const std::size_t width = (*specs_)[block].kind.size();
    return (*this)[block].subspan(r * width, width);
  }

 private:
  const std::vector<block_spec>* specs_;
  std::vector<std::size_t> offset_;
  std::vector<T> data_;
};

/**
 * Observation subset for a stochastic evaluation. Indices are 0-based into
 * the model's observations; the likelihood of the subset is scaled by
 * total / indices.size().
 */
struct minibatch {
  std::vector<std::size_t> indices;
  std::size_t total = 0;

  double scale() const {
    return static_cast<double>(total) / static_cast<double>(indices.size());
  }
};

/**
 * A differentiable probability model: parameter blocks with their support
 * transforms, and the log joint density evaluated on the unconstrained
 * coordinates (transformed log joint plus log Jacobian terms).
 *
 * Models are immutable after construction and safe to share across threads;
 * all evaluation state lives on the caller's expression graph.
 */
class model {
 public:
  virtual ~model() = default;

  const std::string& name() const { return name_; }

  /** Blocks in declaration order. */
  const std::vector<block_spec>& blocks() const { return blocks_; }

  /** Declaration indices in the order the blocks are packed into zeta. */
  const std::vector<std::size_t>& packing_order() const { return order_; }

  /** Repacks zeta (and constrained rows) in the given block-name order. */
  void set_packing_order(const std::vector<std::string>& names) {
    if (names.size() != blocks_.size())
      throw config_error("packing order must name every block once");
    std::vector<std::size_t> order;
    for (const std::string& n : names) {
      auto it = std::find_if(blocks_.begin(), blocks_.end(),
                             [&](const block_spec& b) { return b.name == n; });
      if (it == blocks_.end()) throw config_error("unknown block: " + n);
      order.push_back(static_cast<std::size_t>(it - blocks_.begin()));
    }
    if (std::set<std::size_t>(order.begin(), order.end()).size() !=
        order.size())
      throw config_error("packing order repeats a block");
    order_ = std::move(order);
  }

  /** Total unconstrained dimension K. */
  std::size_t dim() const {
    std::size_t k = 0;
    for (const block_spec& b : blocks_) k += b.unconstrained_size();
    return k;
  }

  std::size_t constrained_size() const {
    std::size_t n = 0;
    for (const block_spec& b : blocks_) n += b.constrained_size();
    return n;
  }

  /** Flattened constrained names in packing order: name, name.j, name.r.j. */
  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (std::size_t b : order_) {
      const block_spec& spec = blocks_[b];
      switch (spec.shape) {
        case block_shape::scalar: out.push_back(spec.name); break;
        case block_shape::vector:
          for (std::size_t j = 0; j < spec.kind.size(); ++j)
            out.push_back(spec.name + "." + std::to_string(j + 1));
          break;
        case block_shape::array:
          for (std::size_t r = 0; r < spec.rows; ++r)
            for (std::size_t j = 0; j < spec.kind.size(); ++j)
              out.push_back(spec.name + "." + std::to_string(r + 1) + "." +
                            std::to_string(j + 1));
          break;
      }
    }
    return out;
  }

  const std::map<std::string, double>& hyperparameters() const {
    return hypers_;
  }
  const std::map<std::string, long long>& dims() const { return dims_; }

  /** Whether the likelihood factorizes over observations. */
  virtual bool supports_subsampling() const { return true; }

  /** Minibatch size the model runs with when the caller sets none. */
  std::optional<std::size_t> default_batch_size() const {
    return default_batch_;
  }

  virtual std::size_t num_observations(const dataset& data) const = 0;

  /** Throws shape_error when `data` does not fit this model's dimensions. */
  virtual void validate(const dataset& data) const = 0;

  /**
   * log p(X, T^{-1}(zeta)) + log|det J_{T^{-1}}(zeta)|, with the likelihood
   * restricted to and scaled for `batch` when one is given.
   */
  virtual var log_joint(std::span<const var> zeta, const dataset& data,
                        const minibatch* batch = nullptr) const = 0;
  virtual double log_joint(std::span<const double> zeta, const dataset& data,
                           const minibatch* batch = nullptr) const = 0;

  /**
   * Per-observation log likelihood at constrained values given as one
   * flattened row in column_names() order.
   */
  virtual std::vector<double> log_likelihood_terms(
      std::span<const double> constrained_row, const dataset& data) const = 0;

  /** T^{-1}(zeta) flattened in column order. */
  std::vector<double> constrain(std::span<const double> zeta) const {
    double log_det = 0.0;
    block_values<double> values = unpack<double>(zeta, log_det);
    return flatten(values);
  }

  /** T(theta) for a flattened constrained row. */
  std::vector<double> unconstrain(std::span<const double> row) const {
    if (row.size() != constrained_size())
      throw shape_error("unconstrain: row has wrong length");
    std::vector<double> zeta;
    zeta.reserve(dim());
    std::size_t pos = 0;
    for (std::size_t b : order_) {
      const block_spec& spec = blocks_[b];
      for (std::size_t r = 0; r < spec.rows; ++r) {
        const std::vector<double> z =
            advi::unconstrain(spec.kind, row.subspan(pos, spec.kind.size()));
        zeta.insert(zeta.end(), z.begin(), z.end());
        pos += spec.kind.size();
      }
    }
    return zeta;
  }

  /** Whether a flattened constrained row satisfies every block support. */
  bool in_support(std::span<const double> row, double sum_tol = 1e-12) const {
    if (row.size() != constrained_size()) return false;
    std::size_t pos = 0;
    for (std::size_t b : order_) {
      const block_spec& spec = blocks_[b];
      for (std::size_t r = 0; r < spec.rows; ++r) {
        if (!spec.kind.contains(row.subspan(pos, spec.kind.size()), sum_tol))
          return false;
        pos += spec.kind.size();
      }
    }
    return true;
  }

  /** Splits zeta by block, constrains each, and sums the log Jacobians. */
  template <typename T>
  block_values<T> unpack(std::span<const T> zeta, T& log_det) const {
    if (zeta.size() != dim())
      throw shape_error(name_ + ": expected " + std::to_string(dim()) +
                        " unconstrained values, got " +
                        std::to_string(zeta.size()));
    block_values<T> values(blocks_);
    std::vector<T> terms;
    std::size_t pos = 0;
    for (std::size_t b : order_) {
      const block_spec& spec = blocks_[b];
      std::span<T> out = values.mutable_block(b);
      const std::size_t in_width = spec.kind.unconstrained_size();
      const std::size_t out_width = spec.kind.size();
      for (std::size_t r = 0; r < spec.rows; ++r) {
        terms.push_back(constrain_into<T>(spec.kind, zeta.subspan(pos, in_width),
                                          out.subspan(r * out_width, out_width)));
        pos += in_width;
      }
    }
    log_det = sum(std::span<const T>(terms));
    return values;
  }

  /** Inverse of flatten(): a column-order row back into block values. */
  block_values<double> unflatten(std::span<const double> row) const {
    if (row.size() != constrained_size())
      throw shape_error(name_ + ": constrained row has wrong length");
    block_values<double> values(blocks_);
    std::size_t pos = 0;
    for (std::size_t b : order_) {
      std::span<double> out = values.mutable_block(b);
      std::copy(row.begin() + static_cast<std::ptrdiff_t>(pos),
                row.begin() + static_cast<std::ptrdiff_t>(pos + out.size()),
                out.begin());
      pos += out.size();
    }
    return values;
  }

  std::vector<double> flatten(const block_values<double>& values) const {
    std::vector<double> row;
    row.reserve(constrained_size());
    for (std::size_t b : order_) {
      std::span<const double> v = values[b];
      row.insert(row.end(), v.begin(), v.end());
    }
    return row;
  }

 protected:
  model(std::string name, std::vector<block_spec> blocks,
        std::map<std::string, double> hypers,
        std::map<std::string, long long> dims)
      : name_(std::move(name)),
        blocks_(std::move(blocks)),
        hypers_(std::move(hypers)),
        dims_(std::move(dims)) {
    std::set<std::string> seen;
    for (const block_spec& b : blocks_)
      if (!seen.insert(b.name).second)
        throw config_error("duplicate block name: " + b.name);
    order_.resize(blocks_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  void set_default_batch_size(std::size_t b) { default_batch_ = b; }

 private:
  std::string name_;
  std::vector<block_spec> blocks_;
  std::vector<std::size_t> order_;
  std::map<std::string, double> hypers_;
  std::map<std::string, long long> dims_;
  std::optional<std::size_t> default_batch_;
};

/**
 * Implements the model evaluation entry points from two templates the
 * derived class provides:
 *
 *   template <typename T> T log_prior(const block_values<T>&) const;
 *   template <typename T>
 *   void log_likelihood(const block_values<T>&, const dataset&,
 *                       std::span<const std::size_t> observations,
 *                       std::vector<T>& terms) const;
 *
 * log_likelihood appends one term per requested observation, in order.
 */
template <class Derived>
class model_base : public model {
 public:
  var log_joint(std::span<const var> zeta, const dataset& data,
                const minibatch* batch = nullptr) const override {
    return evaluate<var>(zeta, data, batch);
  }

  double log_joint(std::span<const double> zeta, const dataset& data,
                   const minibatch* batch = nullptr) const override {
    return evaluate<double>(zeta, data, batch);
  }

  std::vector<double> log_likelihood_terms(
      std::span<const double> constrained_row,
      const dataset& data) const override {
    const block_values<double> values = unflatten(constrained_row);
    std::vector<std::size_t> all(num_observations(data));
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> terms;
    terms.reserve(all.size());
    derived().log_likelihood(values, data, std::span<const std::size_t>(all),
                             terms);
    return terms;
  }

  template <typename T>
  T evaluate(std::span<const T> zeta, const dataset& data,
             const minibatch* batch) const {
    T log_det(0.0);
    const block_values<T> values = unpack<T>(zeta, log_det);
    const T prior = derived().log_prior(values);

    const std::size_t n_obs = num_observations(data);
    std::vector<std::size_t> all;
    std::span<const std::size_t> observations;
    if (batch != nullptr) {
      if (!supports_subsampling())
        throw config_error(name() + ": likelihood does not factorize");
      if (batch->indices.empty()) throw config_error("minibatch is empty");
      if (batch->total != n_obs)
        throw config_error("minibatch total does not match the dataset");
      for (std::size_t i : batch->indices)
        if (i >= n_obs) throw config_error("minibatch index out of range");
      observations = batch->indices;
    } else {
      all.resize(n_obs);
      std::iota(all.begin(), all.end(), std::size_t{0});
      observations = all;
    }

    std::vector<T> terms;
    terms.reserve(observations.size());
    derived().log_likelihood(values, data, observations, terms);
    T likelihood = sum(std::span<const T>(terms));
    if (batch != nullptr) likelihood = likelihood * batch->scale();

    const T parts[] = {log_det, prior, likelihood};
    return sum(std::span<const T>(parts));
  }

 protected:
  using model::model;

 private:
  const Derived& derived() const { return static_cast<const Derived&>(*this); }
};

/** The transformed log joint at zeta; differentiable when zeta holds vars. */
template <typename T>
T log_joint_unconstrained(const model& m, const dataset& data,
                          std::span<const T> zeta) {
  return m.log_joint(zeta, data, nullptr);
}

/** Prior + log Jacobian + (N / B) * likelihood over the batch. */
template <typename T>
T minibatch_log_joint(const model& m, const dataset& data,
                      const minibatch& batch, std::span<const T> zeta) {
  return m.log_joint(zeta, data, &batch);
}

}  // namespace advi

#endif

#ifndef ADVI_AUTODIFF_HPP
#define ADVI_AUTODIFF_HPP

#include <advi/errors.hpp>

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace advi {

// Generic model code calls log/exp/sqrt/pow unqualified on either double or
// var; the std overloads have to be visible next to the var overloads.
using std::exp;
using std::log;
using std::pow;
using std::sqrt;

enum class primitive : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  log,
  exp,
  sqrt,
  pow,
  logistic,
  log1p_exp,
  log_gamma,
  log_sum_exp,
  dot,
  sum
};

inline const char* primitive_name(primitive op) {
  switch (op) {
    case primitive::leaf: return "leaf";
    case primitive::add: return "add";
    case primitive::sub: return "sub";
    case primitive::mul: return "mul";
    case primitive::div: return "div";
    case primitive::neg: return "neg";
    case primitive::log: return "log";
    case primitive::exp: return "exp";
    case primitive::sqrt: return "sqrt";
    case primitive::pow: return "pow";
    case primitive::logistic: return "logistic";
    case primitive::log1p_exp: return "log1p_exp";
    case primitive::log_gamma: return "log_gamma";
    case primitive::log_sum_exp: return "log_sum_exp";
    case primitive::dot: return "dot";
    case primitive::sum: return "sum";
  }
  return "unknown";
}

namespace detail {

[[noreturn]] inline void throw_domain(const char* function, const char* what,
                                      double value) {
  std::ostringstream msg;
  msg.precision(17);
  msg << function << ": " << what << " (got " << value << ")";
  throw std::domain_error(msg.str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar functions on plain doubles. The var overloads below compute their
// values through these so both evaluation paths agree bit for bit.

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/** log(1 + exp(x)) without overflow for large x. */
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double log_gamma(double x) { return std::lgamma(x); }

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty())
    detail::throw_domain("log_sum_exp", "needs at least one term", 0.0);
  const double max = *std::max_element(xs.begin(), xs.end());
  if (max == -std::numeric_limits<double>::infinity()) return max;
  if (!std::isfinite(max)) return max;
  double total = 0.0;
  for (double x : xs) total += std::exp(x - max);
  return max + std::log(total);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw shape_error("dot: operand lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

inline double sum(std::span<const double> xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return total;
}

inline double value_of(double x) { return x; }

// ---------------------------------------------------------------------------

class expression_graph;

/**
 * A scalar that records the operations applied to it on an expression graph.
 *
 * A default- or double-constructed var is a constant: it belongs to no graph
 * and contributes no gradient. Every other var refers to a node of the graph
 * that created it, and that graph must outlive it.
 */
class var {
 public:
  var() = default;
  var(double value) : value_(value) {}  // NOLINT: implicit constant

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return graph_ == nullptr; }
  expression_graph* owner() const noexcept { return graph_; }
  std::size_t index() const noexcept { return index_; }

 private:
  friend class expression_graph;
  var(expression_graph* g, std::uint32_t index, double value)
      : graph_(g), index_(index), value_(value) {}

  expression_graph* graph_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

inline double value_of(const var& x) { return x.value(); }

/** One incoming edge of a node: which operand, and d(node)/d(operand). */
struct graph_edge {
  std::uint32_t operand;
  double partial;
};

/**
 * Append-only tape of scalar operations.
 *
 * Nodes are stored in creation order, so every operand index is smaller than
 * the index of the node that uses it and a single reverse sweep computes all
 * adjoints. A graph is owned by one thread; vars hold a raw pointer back to
 * it, so it is neither copyable nor movable.
 */
class expression_graph {
 public:
  expression_graph() = default;
  expression_graph(const expression_graph&) = delete;
  expression_graph& operator=(const expression_graph&) = delete;

  /** New independent variable (a leaf). Throws std::domain_error unless finite. */
  var variable(double value) {
    if (!std::isfinite(value))
      detail::throw_domain("variable", "value must be finite", value);
    return push(primitive::leaf, value, {});
  }

  /**
   * Applies a primitive by kind. Unary and binary primitives take one and two
   * operands; log_sum_exp and sum take one or more; dot takes the two paired
   * lists concatenated (so an even, nonzero count).
   */
  var apply(primitive op, std::span<const var> operands);

  std::size_t size() const noexcept { return nodes_.size(); }
  double value(std::size_t i) const { return nodes_.at(i).value; }
  primitive op(std::size_t i) const { return nodes_.at(i).op; }
  bool is_leaf(std::size_t i) const { return op(i) == primitive::leaf; }
  std::span<const graph_edge> operands(std::size_t i) const {
    const node& n = nodes_.at(i);
    return {edges_.data() + n.first_edge, n.edge_count};
  }

  /** Drops every node; outstanding vars on this graph become invalid. */
  void clear() noexcept {
    nodes_.clear();
    edges_.clear();
  }

  /** d(output)/d(node) for every node, by one reverse sweep. */
  std::vector<double> adjoints(const var& output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output.is_constant()) return adj;
    check_owned(output);
    adj[output.index()] = 1.0;
    for (std::size_t i = output.index() + 1; i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const node& n = nodes_[i];
      for (std::uint32_t e = 0; e < n.edge_count; ++e) {
        const graph_edge& edge = edges_[n.first_edge + e];
        adj[edge.operand] += a * edge.partial;
      }
    }
    return adj;
  }

  // Low-level node construction used by the primitive functions.
  var push(primitive op, double value, std::initializer_list<graph_edge> in) {
    return push(op, value, std::span<const graph_edge>(in.begin(), in.size()));
  }

  var push(primitive op, double value, std::span<const graph_edge> in) {
    if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max())
      throw std::length_error("expression_graph: too many nodes");
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    for (const graph_edge& e : in)
      if (e.operand >= index)
        throw std::logic_error("expression_graph: operand after node");
    nodes_.push_back({value, static_cast<std::uint32_t>(edges_.size()),
                      static_cast<std::uint32_t>(in.size()), op});
    edges_.insert(edges_.end(), in.begin(), in.end());
    return var(this, index, value);
  }

  void check_owned(const var& x) const {
    if (x.owner() != this || x.index() >= nodes_.size())
      throw std::invalid_argument("var does not belong to this graph");
  }

 private:
  struct node {
    double value;
    std::uint32_t first_edge;
    std::uint32_t edge_count;
    primitive op;
  };

  std::vector<node> nodes_;
  std::vector<graph_edge> edges_;
};

namespace detail {

inline expression_graph* common_graph(const var& a, const var& b) {
  if (a.is_constant()) return b.owner();
  if (b.is_constant()) return a.owner();
  if (a.owner() != b.owner())
    throw std::invalid_argument("operands belong to different graphs");
  return a.owner();
}

inline expression_graph* common_graph(std::span<const var> xs) {
  expression_graph* g = nullptr;
  for (const var& x : xs) {
    if (x.is_constant()) continue;
    if (g == nullptr)
      g = x.owner();
    else if (g != x.owner())
      throw std::invalid_argument("operands belong to different graphs");
  }
  return g;
}

inline var unary(primitive op, const var& a, double value, double partial) {
  if (a.is_constant()) return var(value);
  return a.owner()->push(
      op, value, {graph_edge{static_cast<std::uint32_t>(a.index()), partial}});
}

inline var binary(primitive op, const var& a, const var& b, double value,
                  double da, double db) {
  expression_graph* g = common_graph(a, b);
  if (g == nullptr) return var(value);
  if (a.is_constant())
    return g->push(op, value,
                   {graph_edge{static_cast<std::uint32_t>(b.index()), db}});
  if (b.is_constant())
    return g->push(op, value,
                   {graph_edge{static_cast<std::uint32_t>(a.index()), da}});
  return g->push(op, value,
                 {graph_edge{static_cast<std::uint32_t>(a.index()), da},
                  graph_edge{static_cast<std::uint32_t>(b.index()), db}});
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitives on vars.

inline var operator+(const var& a, const var& b) {
  return detail::binary(primitive::add, a, b, a.value() + b.value(), 1.0, 1.0);
}

inline var operator-(const var& a, const var& b) {
  return detail::binary(primitive::sub, a, b, a.value() - b.value(), 1.0,
                        -1.0);
}

inline var operator*(const var& a, const var& b) {
  return detail::binary(primitive::mul, a, b, a.value() * b.value(),
                        b.value(), a.value());
}

inline var operator/(const var& a, const var& b) {
  if (b.value() == 0.0)
    detail::throw_domain("div", "divisor must be nonzero", b.value());
  const double inv = 1.0 / b.value();
  const double q = a.value() / b.value();
  return detail::binary(primitive::div, a, b, q, inv, -q * inv);
}

inline var operator-(const var& a) {
  return detail::unary(primitive::neg, a, -a.value(), -1.0);
}

inline var& operator+=(var& a, const var& b) { return a = a + b; }
inline var& operator-=(var& a, const var& b) { return a = a - b; }
inline var& operator*=(var& a, const var& b) { return a = a * b; }
inline var& operator/=(var& a, const var& b) { return a = a / b; }

inline var log(const var& x) {
  if (!(x.value() > 0.0))
    detail::throw_domain("log", "argument must be positive", x.value());
  return detail::unary(primitive::log, x, std::log(x.value()),
                       1.0 / x.value());
}

inline var exp(const var& x) {
  const double e = std::exp(x.value());
  return detail::unary(primitive::exp, x, e, e);
}

inline var sqrt(const var& x) {
  if (!(x.value() >= 0.0))
    detail::throw_domain("sqrt", "argument must be nonnegative", x.value());
  const double r = std::sqrt(x.value());
  return detail::unary(primitive::sqrt, x, r, 0.5 / r);
}

inline var pow(const var& base, const var& exponent) {
  const double b = base.value();
  const double e = exponent.value();
  const bool integral_exponent = exponent.is_constant() && std::floor(e) == e;
  if (!(b > 0.0) && !integral_exponent)
    detail::throw_domain("pow", "base must be positive", b);
  if (b == 0.0 && e < 1.0)
    detail::throw_domain("pow", "base must be nonzero for exponent < 1", b);
  const double value = std::pow(b, e);
  const double d_base = e * std::pow(b, e - 1.0);
  const double d_exponent = b > 0.0 ? std::log(b) * value : 0.0;
  return detail::binary(primitive::pow, base, exponent, value, d_base,
                        d_exponent);
}

inline var pow(const var& base, double exponent) {
  return pow(base, var(exponent));
}

inline var pow(double base, const var& exponent) {
  return pow(var(base), exponent);
}

inline var logistic(const var& x) {
  const double s = logistic(x.value());
  return detail::unary(primitive::logistic, x, s, s * (1.0 - s));
}

inline var log1p_exp(const var& x) {
  return detail::unary(primitive::log1p_exp, x, log1p_exp(x.value()),
                       logistic(x.value()));
}

inline var log_gamma(const var& x) {
  if (!(x.value() > 0.0))
    detail::throw_domain("log_gamma", "argument must be positive", x.value());
  return detail::unary(primitive::log_gamma, x, std::lgamma(x.value()),
                       boost::math::digamma(x.value()));
}

/** Overflow-safe log(sum(exp(x))); partials are the softmax weights. */
inline var log_sum_exp(std::span<const var> xs) {
  if (xs.empty())
    detail::throw_domain("log_sum_exp", "needs at least one term", 0.0);
  std::vector<double> values(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) values[i] = xs[i].value();
  const double value = log_sum_exp(values);
  expression_graph* g = detail::common_graph(xs);
  if (g == nullptr) return var(value);
  std::vector<graph_edge> edges;
  edges.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].is_constant()) continue;
    const double w = std::isfinite(value) ? std::exp(values[i] - value) : 0.0;
    edges.push_back({static_cast<std::uint32_t>(xs[i].index()), w});
  }
  return g->push(primitive::log_sum_exp, value, edges);
}

namespace detail {

template <typename A, typename B>
var dot_impl(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw shape_error("dot: operand lengths differ");
  double value = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    value += value_of(a[i]) * value_of(b[i]);
  expression_graph* g = nullptr;
  std::vector<graph_edge> edges;
  edges.reserve(2 * a.size());
  auto note = [&](const auto& x, double partial) {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, var>) {
      if (x.is_constant()) return;
      if (g == nullptr)
        g = x.owner();
      else if (g != x.owner())
        throw std::invalid_argument("operands belong to different graphs");
      edges.push_back({static_cast<std::uint32_t>(x.index()), partial});
    }
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    note(a[i], value_of(b[i]));
    note(b[i], value_of(a[i]));
  }
  if (g == nullptr) return var(value);
  return g->push(primitive::dot, value, edges);
}

}  // namespace detail

inline var dot(std::span<const var> a, std::span<const var> b) {
  return detail::dot_impl(a, b);
}
inline var dot(std::span<const double> a, std::span<const var> b) {
  return detail::dot_impl(a, b);
}
inline var dot(std::span<const var> a, std::span<const double> b) {
  return detail::dot_impl(a, b);
}

inline var sum(std::span<const var> xs) {
  double value = 0.0;
  for (const var& x : xs) value += x.value();
  expression_graph* g = detail::common_graph(xs);
  if (g == nullptr) return var(value);
  std::vector<graph_edge> edges;
  edges.reserve(xs.size());
  for (const var& x : xs)
    if (!x.is_constant())
      edges.push_back({static_cast<std::uint32_t>(x.index()), 1.0});
  return g->push(primitive::sum, value, edges);
}

inline var expression_graph::apply(primitive op, std::span<const var> xs) {
  for (const var& x : xs)
    if (!x.is_constant()) check_owned(x);
  auto arity = [&](std::size_t n) {
    if (xs.size() != n)
      throw std::invalid_argument(std::string(primitive_name(op)) +
                                  ": wrong number of operands");
  };
  switch (op) {
    case primitive::leaf:
      arity(1);
      return variable(xs[0].value());
    case primitive::add: arity(2); return xs[0] + xs[1];
    case primitive::sub: arity(2); return xs[0] - xs[1];
    case primitive::mul: arity(2); return xs[0] * xs[1];
    case primitive::div: arity(2); return xs[0] / xs[1];
    case primitive::pow: arity(2); return pow(xs[0], xs[1]);
    case primitive::neg: arity(1); return -xs[0];
    case primitive::log: arity(1); return log(xs[0]);
    case primitive::exp: arity(1); return exp(xs[0]);
    case primitive::sqrt: arity(1); return sqrt(xs[0]);
    case primitive::logistic: arity(1); return logistic(xs[0]);
    case primitive::log1p_exp: arity(1); return log1p_exp(xs[0]);
    case primitive::log_gamma: arity(1); return log_gamma(xs[0]);
    case primitive::log_sum_exp: return log_sum_exp(xs);
    case primitive::sum: return sum(xs);
    case primitive::dot: {
      if (xs.empty() || xs.size() % 2 != 0)
        throw std::invalid_argument("dot: needs two lists of equal length");
      const std::size_t half = xs.size() / 2;
      return dot(xs.first(half), xs.subspan(half));
    }
  }
  throw std::invalid_argument("unknown primitive");
}

/**
 * Partial derivatives of `output` with respect to every leaf of `graph`,
 * keyed by leaf node index.
 */
inline std::map<std::size_t, double> backward(const expression_graph& graph,
                                              const var& output) {
  const std::vector<double> adj = graph.adjoints(output);
  std::map<std::size_t, double> result;
  for (std::size_t i = 0; i < graph.size(); ++i)
    if (graph.is_leaf(i)) result.emplace(i, adj[i]);
  return result;
}

/** d(output)/d(x) for each x in `wrt`, in order. Constants get 0. */
inline std::vector<double> gradient(const var& output,
                                    std::span<const var> wrt) {
  std::vector<double> g(wrt.size(), 0.0);
  if (output.is_constant()) return g;
  const std::vector<double> adj = output.owner()->adjoints(output);
  for (std::size_t i = 0; i < wrt.size(); ++i)
    if (!wrt[i].is_constant() && wrt[i].owner() == output.owner())
      g[i] = adj[wrt[i].index()];
  return g;
}

/** var if any of Ts is var, else double. */
template <typename... Ts>
using scalar_result_t =
    std::conditional_t<(std::is_same_v<std::decay_t<Ts>, var> || ...), var,
                       double>;

}  // namespace advi

#endif

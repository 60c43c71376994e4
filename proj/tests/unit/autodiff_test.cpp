#include <advi/autodiff.hpp>

#include <oracles.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <vector>

using advi::expression_graph;
using advi::primitive;
using advi::var;

namespace {

TEST(build_variable, stores_value) {
  expression_graph g;
  EXPECT_EQ(g.variable(2.5).value(), 2.5);
  EXPECT_EQ(g.variable(0.0).value(), 0.0);
  EXPECT_EQ(g.size(), 2u);
  EXPECT_TRUE(g.is_leaf(0));
}

TEST(build_variable, rejects_non_finite) {
  expression_graph g;
  EXPECT_THROW(g.variable(std::nan("")), std::domain_error);
  EXPECT_THROW(g.variable(std::numeric_limits<double>::infinity()),
               std::domain_error);
  EXPECT_EQ(g.size(), 0u);
}

TEST(apply_primitive, spec_examples) {
  expression_graph g;
  const var one = g.variable(1.0);
  const var zero = g.variable(0.0);
  EXPECT_EQ(advi::log(one).value(), 0.0);
  const var pair[] = {zero, zero};
  EXPECT_NEAR(advi::log_sum_exp(pair).value(), 0.6931472, 1e-7);
  EXPECT_EQ(advi::log_gamma(one).value(), 0.0);
}

TEST(apply_primitive, by_kind_matches_direct_calls) {
  expression_graph g;
  const var a = g.variable(1.7);
  const var b = g.variable(0.4);
  const var ab[] = {a, b};
  const var aa[] = {a};
  EXPECT_EQ(g.apply(primitive::add, ab).value(), (a + b).value());
  EXPECT_EQ(g.apply(primitive::sub, ab).value(), (a - b).value());
  EXPECT_EQ(g.apply(primitive::mul, ab).value(), (a * b).value());
  EXPECT_EQ(g.apply(primitive::div, ab).value(), (a / b).value());
  EXPECT_EQ(g.apply(primitive::pow, ab).value(), advi::pow(a, b).value());
  EXPECT_EQ(g.apply(primitive::neg, aa).value(), -1.7);
  EXPECT_EQ(g.apply(primitive::exp, aa).value(), std::exp(1.7));
  EXPECT_EQ(g.apply(primitive::dot, ab).value(), 1.7 * 0.4);
  EXPECT_EQ(g.apply(primitive::log_sum_exp, ab).value(),
            advi::log_sum_exp(ab).value());
  EXPECT_THROW(g.apply(primitive::add, aa), std::invalid_argument);
  const var three[] = {a, b, a};
  EXPECT_THROW(g.apply(primitive::dot, three), std::invalid_argument);
}

TEST(apply_primitive, domain_errors_name_the_primitive) {
  expression_graph g;
  const var zero = g.variable(0.0);
  const var neg = g.variable(-1.0);
  auto message = [](auto&& f) {
    try {
      f();
    } catch (const std::domain_error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message([&] { advi::log(zero); }).find("log"), std::string::npos);
  EXPECT_NE(message([&] { advi::sqrt(neg); }).find("sqrt"), std::string::npos);
  EXPECT_NE(message([&] { (neg / zero); }).find("div"), std::string::npos);
  EXPECT_NE(message([&] { advi::log_gamma(zero); }).find("log_gamma"),
            std::string::npos);
  EXPECT_NE(message([&] { advi::pow(neg, 0.5); }).find("pow"),
            std::string::npos);
  EXPECT_NE(message([&] { advi::log(neg); }).find("-1"), std::string::npos);
}

TEST(apply_primitive, rejects_operands_from_another_graph) {
  expression_graph g1;
  expression_graph g2;
  const var a = g1.variable(1.0);
  const var b = g2.variable(2.0);
  EXPECT_THROW(a + b, std::invalid_argument);
  const var both[] = {a, b};
  EXPECT_THROW(g1.apply(primitive::sum, both), std::invalid_argument);
}

TEST(graph, operands_precede_their_node) {
  expression_graph g;
  const var x = g.variable(0.3);
  const var y = g.variable(1.2);
  const var terms[] = {x * y, advi::exp(x), advi::log(y)};
  advi::log_sum_exp(terms) / (x + 2.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const advi::graph_edge& e : g.operands(i)) EXPECT_LT(e.operand, i);
}

TEST(backward, spec_examples) {
  {
    expression_graph g;
    const var x = g.variable(3.0);
    const var y = g.variable(4.0);
    const auto grad = advi::backward(g, x * y);
    EXPECT_EQ(grad.at(x.index()), 4.0);
    EXPECT_EQ(grad.at(y.index()), 3.0);
  }
  {
    expression_graph g;
    const var x = g.variable(2.0);
    EXPECT_EQ(advi::backward(g, advi::log(x)).at(x.index()), 0.5);
  }
  {
    expression_graph g;
    const var x[] = {g.variable(0.0), g.variable(0.0)};
    const auto grad = advi::backward(g, advi::log_sum_exp(x));
    const auto fd = advi::test::central_difference(
        [](const std::vector<double>& v) { return advi::log_sum_exp(v); },
        {0.0, 0.0});
    EXPECT_DOUBLE_EQ(grad.at(0), 0.5);
    EXPECT_DOUBLE_EQ(grad.at(1), 0.5);
    EXPECT_NEAR(grad.at(0), fd[0], 1e-9);
    EXPECT_NEAR(grad.at(1), fd[1], 1e-9);
  }
}

TEST(backward, covers_every_leaf_and_accumulates_reuse) {
  expression_graph g;
  const var x = g.variable(1.5);
  const var unused = g.variable(9.0);
  const var f = x * x * x + x;  // 3x^2 + 1
  const auto grad = advi::backward(g, f);
  EXPECT_EQ(grad.size(), 2u);
  EXPECT_DOUBLE_EQ(grad.at(x.index()), 3.0 * 1.5 * 1.5 + 1.0);
  EXPECT_EQ(grad.at(unused.index()), 0.0);
}

struct primitive_case {
  const char* name;
  std::size_t arity;
  std::function<double(std::mt19937_64&)> draw;
  std::function<var(std::span<const var>)> apply;
};

double uniform(std::mt19937_64& e, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(e);
}

// Every primitive, 100 random in-domain inputs, against central differences
// of the same function evaluated on plain doubles.
TEST(backward, matches_central_differences_for_every_primitive) {
  auto real = [](std::mt19937_64& e) { return uniform(e, -3.0, 3.0); };
  auto positive = [](std::mt19937_64& e) { return uniform(e, 0.2, 4.0); };
  auto away_from_zero = [](std::mt19937_64& e) {
    const double x = uniform(e, 0.3, 3.0);
    return std::bernoulli_distribution(0.5)(e) ? x : -x;
  };
  const std::vector<primitive_case> cases = {
      {"add", 2, real, [](auto x) { return x[0] + x[1]; }},
      {"sub", 2, real, [](auto x) { return x[0] - x[1]; }},
      {"mul", 2, real, [](auto x) { return x[0] * x[1]; }},
      {"div", 2, away_from_zero, [](auto x) { return x[0] / x[1]; }},
      {"neg", 1, real, [](auto x) { return -x[0]; }},
      {"log", 1, positive, [](auto x) { return advi::log(x[0]); }},
      {"exp", 1, real, [](auto x) { return advi::exp(x[0]); }},
      {"sqrt", 1, positive, [](auto x) { return advi::sqrt(x[0]); }},
      {"pow", 2, positive, [](auto x) { return advi::pow(x[0], x[1]); }},
      {"logistic", 1, real, [](auto x) { return advi::logistic(x[0]); }},
      {"log1p_exp", 1, real, [](auto x) { return advi::log1p_exp(x[0]); }},
      {"log_gamma", 1, positive, [](auto x) { return advi::log_gamma(x[0]); }},
      {"log_sum_exp", 4, real, [](auto x) { return advi::log_sum_exp(x); }},
      {"sum", 3, real, [](auto x) { return advi::sum(x); }},
      {"dot", 6, real,
       [](auto x) { return advi::dot(x.first(3), x.subspan(3)); }},
  };
  std::mt19937_64 engine(20240601);
  for (const primitive_case& c : cases) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> point(c.arity);
      for (double& v : point) v = c.draw(engine);
      auto f = [&](const std::vector<double>& x) {
        std::vector<var> constants(x.begin(), x.end());
        return c.apply(constants).value();
      };
      expression_graph g;
      std::vector<var> leaves;
      for (double v : point) leaves.push_back(g.variable(v));
      const var out = c.apply(leaves);
      EXPECT_EQ(out.value(), f(point)) << c.name;
      const std::vector<double> ad = advi::gradient(out, leaves);
      const std::vector<double> fd = advi::test::central_difference(f, point);
      for (std::size_t i = 0; i < point.size(); ++i)
        EXPECT_LE(std::abs(ad[i] - fd[i]), 1e-6 * std::max(1.0, std::abs(fd[i])))
            << c.name << " input " << i << " at trial " << trial;
    }
  }
}

TEST(log_sum_exp, shift_invariant_without_overflow) {
  std::mt19937_64 engine(7);
  for (double c : {-700.0, -350.5, -1.0, 0.0, 2.25, 350.0, 699.9, 700.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(5), shifted(5);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = uniform(engine, -5.0, 5.0);
        shifted[i] = x[i] + c;
      }
      const double base = advi::log_sum_exp(x);
      EXPECT_NEAR(advi::log_sum_exp(shifted), base + c, 1e-12) << "c=" << c;
      expression_graph g;
      std::vector<var> leaves;
      for (double v : shifted) leaves.push_back(g.variable(v));
      const var out = advi::log_sum_exp(leaves);
      EXPECT_TRUE(std::isfinite(out.value()));
      const std::vector<double> w = advi::gradient(out, leaves);
      double total = 0.0;
      for (double v : w) total += v;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(graph, rebuilding_is_bit_identical) {
  auto build = [](std::vector<double>& grad) {
    expression_graph g;
    std::vector<var> x = {g.variable(0.37), g.variable(-1.1), g.variable(2.4)};
    const var terms[] = {advi::log_gamma(advi::exp(x[0]) + 1.0),
                         advi::logistic(x[1]) * x[2],
                         advi::pow(advi::exp(x[2]), x[0])};
    const var out = advi::log_sum_exp(terms) + advi::dot(x, x);
    grad = advi::gradient(out, x);
    return out.value();
  };
  std::vector<double> g1, g2;
  const double v1 = build(g1);
  const double v2 = build(g2);
  EXPECT_EQ(std::memcmp(&v1, &v2, sizeof(double)), 0);
  ASSERT_EQ(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1[i], g2[i]);
}

TEST(var, constants_carry_no_graph) {
  const var c = 3.0;
  EXPECT_TRUE(c.is_constant());
  EXPECT_EQ((c * 2.0).value(), 6.0);
  EXPECT_TRUE((c * 2.0).is_constant());
  expression_graph g;
  const var x = g.variable(5.0);
  const var y = x * c;
  EXPECT_EQ(advi::backward(g, y).at(x.index()), 3.0);
}

}  // namespace

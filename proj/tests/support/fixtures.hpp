#ifndef ADVI_TESTS_SUPPORT_FIXTURES_HPP
#define ADVI_TESTS_SUPPORT_FIXTURES_HPP

#include <advi/synthetic.hpp>
#include <advi/zoo.hpp>

#include <memory>
#include <string>

namespace advi::test {

struct fixture {
  std::unique_ptr<model> m;
  dataset data;
};

/** A small simulated dataset for each zoo model and the model sized to it. */
inline fixture zoo_fixture(const std::string& name, std::uint64_t seed = 3) {
  dataset data;
  if (name == "poisson_exponential") {
    data = synthetic::poisson_counts(6, 1, 2.0, seed).train;
  } else if (name == "linreg_ard") {
    data = synthetic::linreg(30, 1, 4, 0.5, 0.5, seed).train;
  } else if (name == "hier_logistic") {
    data = synthetic::hier_logistic(40, 1, {3, 2, 4, 2}, seed).train;
  } else if (name == "gamma_poisson_nmf" ||
             name == "dirichlet_exponential_nmf") {
    data = synthetic::poisson_factorization(4, 5, 3, seed).train;
  } else if (name == "gmm" || name == "gmm_minibatch") {
    data = synthetic::gaussian_mixture(20, 1, {-2.0, 0.0, 1.0, 1.0, 2.0, -1.0},
                                       2, 0.7, seed)
               .train;
    if (name == "gmm_minibatch") data.set_int("B", 5);
  } else if (name == "std_normal") {
    data.set_int("D", 3);
  }
  fixture f{make_model(name, {}, infer_dims(name, data)), std::move(data)};
  f.m->validate(f.data);
  return f;
}

}  // namespace advi::test

#endif

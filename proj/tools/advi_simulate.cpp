// Writes synthetic train/held-out JSON datasets for the zoo models.

#include <advi/dataset.hpp>
#include <advi/errors.hpp>
#include <advi/synthetic.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Synthetic datasets for the model zoo"};
  std::string kind;
  std::string train_path;
  std::string heldout_path;
  std::uint64_t seed = 0;
  std::size_t n_train = 1000;
  std::size_t n_heldout = 100;
  std::size_t dim = 10;
  std::size_t users = 20;
  std::size_t items = 30;
  std::size_t factors = 3;
  double rate = 3.0;
  double active = 0.2;
  double noise = 1.0;
  double sd = 1.0;
  std::vector<double> means = {-3.0, -3.0, 0.0, 3.0, 3.0, -3.0};

  app.add_option("--kind", kind, "poisson, linreg, hier_logistic, nmf or gmm")
      ->required()
      ->check(CLI::IsMember({"poisson", "linreg", "hier_logistic", "nmf", "gmm"}));
  app.add_option("--train", train_path, "Training JSON path")->required();
  app.add_option("--heldout", heldout_path, "Held-out JSON path");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--n", n_train, "Training observations");
  app.add_option("--n-heldout", n_heldout, "Held-out observations");
  app.add_option("--dim", dim, "Covariate or mixture dimension");
  app.add_option("--users", users, "Rows of the count matrix");
  app.add_option("--items", items, "Columns of the count matrix");
  app.add_option("--factors", factors, "Latent factors");
  app.add_option("--rate", rate, "Poisson rate");
  app.add_option("--active", active, "Fraction of nonzero coefficients");
  app.add_option("--noise", noise, "Regression noise standard deviation");
  app.add_option("--sd", sd, "Mixture component standard deviation");
  app.add_option("--means", means, "Mixture means, K x D row-major");
  CLI11_PARSE(app, argc, argv);

  try {
    namespace syn = advi::synthetic;
    syn::simulated sim;
    if (kind == "poisson")
      sim = syn::poisson_counts(n_train, n_heldout, rate, seed);
    else if (kind == "linreg")
      sim = syn::linreg(n_train, n_heldout, dim, active, noise, seed);
    else if (kind == "hier_logistic")
      sim = syn::hier_logistic(n_train, n_heldout, {}, seed);
    else if (kind == "nmf")
      sim = syn::poisson_factorization(users, items, factors, seed);
    else
      sim = syn::gaussian_mixture(n_train, n_heldout, means, dim, sd, seed);
    advi::save_dataset(train_path, sim.train);
    if (!heldout_path.empty()) advi::save_dataset(heldout_path, sim.heldout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

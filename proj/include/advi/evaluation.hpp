#ifndef ADVI_EVALUATION_HPP
#define ADVI_EVALUATION_HPP

#include <advi/advi.hpp>
#include <advi/autodiff.hpp>
#include <advi/dataset.hpp>
#include <advi/model.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace advi {

struct eval_report {
  /** Average over held-out points of log (1/S) sum_s p(x_n | theta_s). */
  double mean_log_predictive = 0.0;
  std::size_t num_points = 0;
  std::size_t num_draws = 0;
  /** First held-out point every draw gives zero likelihood, if any. */
  std::optional<std::size_t> zero_likelihood_index;
};

/**
 * Monte Carlo posterior predictive on held-out data. Per point the draws'
 * likelihoods are averaged on the log scale with log-sum-exp, then the
 * per-point log predictive is averaged over points.
 */
inline eval_report heldout_log_predictive(const model& m,
                                          const posterior_draws& draws,
                                          const dataset& heldout) {
  if (draws.rows.empty())
    throw config_error("heldout_log_predictive: no posterior draws");
  try {
    m.validate(heldout);
  } catch (const shape_error& e) {
    throw config_error(std::string("held-out data: ") + e.what());
  }
  const std::size_t n_points = m.num_observations(heldout);
  if (n_points == 0)
    throw config_error("held-out data: no observations for " + m.name());
  const std::size_t n_draws = draws.rows.size();

  // per_point[n][s] = log p(x_n | theta_s)
  std::vector<std::vector<double>> per_point(n_points,
                                             std::vector<double>(n_draws));
  for (std::size_t s = 0; s < n_draws; ++s) {
    if (draws.rows[s].size() != m.constrained_size())
      throw config_error("heldout_log_predictive: draw has wrong width");
    std::vector<double> terms;
    try {
      terms = m.log_likelihood_terms(draws.rows[s], heldout);
    } catch (const std::domain_error&) {
      terms.assign(n_points, -std::numeric_limits<double>::infinity());
    }
    for (std::size_t n = 0; n < n_points; ++n) per_point[n][s] = terms[n];
  }

  eval_report report;
  report.num_points = n_points;
  report.num_draws = n_draws;
  const double log_s = std::log(static_cast<double>(n_draws));
  double total = 0.0;
  for (std::size_t n = 0; n < n_points; ++n) {
    const double lme = log_sum_exp(per_point[n]) - log_s;
    if (lme == -std::numeric_limits<double>::infinity() &&
        !report.zero_likelihood_index)
      report.zero_likelihood_index = n;
    total += lme;
  }
  report.mean_log_predictive = total / static_cast<double>(n_points);
  return report;
}

}  // namespace advi

#endif

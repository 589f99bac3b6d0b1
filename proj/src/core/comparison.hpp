#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/fit.hpp"
#include "core/model.hpp"

namespace bpc {

struct PointwiseLogLik {
  std::size_t draws = 0;         // rows (posterior draws, chains concatenated)
  std::size_t observations = 0;  // columns (contests)
  std::vector<double> values;    // row-major
  double at(std::size_t s, std::size_t n) const { return values[s * observations + n]; }
};

// Entry (s, n) = log probability of contest n's observed outcome under draw s.
PointwiseLogLik pointwise_loglik(const CompiledModel& model, const PosteriorFit& fit);

struct IcEstimate {
  double elpd = 0.0;
  double p_eff = 0.0;
  double ic = 0.0;  // -2 * elpd
  double se = 0.0;
  double p_se = 0.0;
  std::vector<double> pointwise;    // per-observation elpd
  std::vector<double> pointwise_p;  // per-observation effective parameters
  std::vector<double> pareto_k;     // PSIS-LOO only; NaN marks an undefined tail
  double mcse = 0.0;              // PSIS-LOO only; NaN when the tails forbid it
  bool smoothed = false;          // PSIS applied (needs >= 50 draws)
  std::size_t draws = 0;
  std::size_t observations = 0;
};

IcEstimate waic(const PointwiseLogLik& ll);

// Zhang-Stephens profile-likelihood fit of the generalized Pareto shape and
// scale to sorted positive exceedances.
std::pair<double, double> fit_generalized_pareto(std::span<const double> sorted_exceedances);

double gpd_quantile(double p, double k, double sigma);

// Pareto-smoothing of one observation's raw importance ratios, exposed for
// the truncation/tail tests.  Returns log weights plus the tail shape.
struct PsisSmoothed {
  std::vector<double> log_weights;
  double khat = 0.0;  // NaN when the tail is degenerate
};
PsisSmoothed psis_smooth(std::span<const double> log_ratios);

IcEstimate psis_loo(const PointwiseLogLik& ll);

struct CompareRow {
  std::string name;
  double elpd = 0, se = 0, p_eff = 0, ic = 0;
  double elpd_diff = 0, se_diff = 0;  // against the top-ranked model
};

// Orders models by elpd and reports paired differences with difference SEs.
std::vector<CompareRow> compare_models(const std::vector<IcEstimate>& estimates,
                                       const std::vector<std::string>& names);

}  // namespace bpc

#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/fit.hpp"

namespace bpc {

enum class IntervalKind : int { Hpd = 0, EqualTailed = 1 };

// Narrowest window of ceil(mass * S) consecutive sorted draws; width ties go
// to the smallest lower bound.
std::pair<double, double> hpd_interval(std::span<const double> sorted_draws, double mass);

// Linear interpolation between order statistics.
double quantile_sorted(std::span<const double> sorted_draws, double p);

std::pair<double, double> equal_tailed_interval(std::span<const double> sorted_draws, double mass);

struct ParameterRow {
  std::string name;
  double mean = 0, median = 0, lower = 0, upper = 0, ess = 0;  // ess NaN when undefined
};
struct ParameterTable {
  std::vector<ParameterRow> rows;
  IntervalKind kind = IntervalKind::Hpd;
  double mass = 0.95;
};

// One row per layout slot on the constrained scale.
ParameterTable summarize(const PosteriorFit& fit, IntervalKind kind = IntervalKind::Hpd,
                         double mass = 0.95);

struct RankRow {
  std::string player;
  double median_rank = 0, mean_rank = 0, sd_rank = 0;
};
struct RankSummary {
  std::vector<RankRow> rows;  // sorted by median then mean rank
};

// Per-draw ranking by descending ability (rank 1 = strongest, exact ties
// broken by registry order), summarized per player.
RankSummary rank_distribution(const PosteriorFit& fit);

struct ProbabilityRow {
  std::string i, j;
  double p_i = 0, p_j = 0, p_tie = 0, odds = 0;
};
struct ProbabilityTable {
  std::vector<ProbabilityRow> rows;  // lexicographic by player pair
  bool has_tie_column = false;
};

// Posterior mean outcome probabilities for every unordered pair, order
// indicator 1, random effects at the subject average.
ProbabilityTable probability_table(const PosteriorFit& fit);

struct PredictRequest {
  std::string player0, player1;
  int order_indicator = 1;
  std::vector<double> covariates;  // subject covariates, one per fit covariate name
};
struct PredictRow {
  std::string player0, player1;
  double p_player0 = 0, p_player1 = 0, p_tie = 0;  // mean over draws
  double freq_player0 = 0, freq_player1 = 0, freq_tie = 0;  // sampled outcome shares
  std::size_t draws_used = 0;
};

// Posterior predictive summaries for new contests.  Covariates arrive raw and
// are standardized with the stored constants unless `standardized` is set.
std::vector<PredictRow> predict(const PosteriorFit& fit, const std::vector<PredictRequest>& rows,
                                std::size_t draws_per_row, std::uint64_t seed,
                                bool standardized = false);

}  // namespace bpc

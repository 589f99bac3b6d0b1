#include "core/posterior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/diagnostics.hpp"
#include "core/rng.hpp"

namespace bpc {

std::pair<double, double> hpd_interval(std::span<const double> sorted, double mass) {
  const std::size_t s = sorted.size();
  if (s < 2) fail(Status::InvalidArgument, "HPD interval needs at least 2 draws");
  if (!(mass > 0.0 && mass < 1.0)) fail(Status::InvalidArgument, "mass must lie in (0, 1)");
  std::size_t m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(s)));
  m = std::clamp<std::size_t>(m, 1, s);
  double best_width = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i + m <= s; ++i) {
    const double width = sorted[i + m - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + m - 1]};
}

double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) fail(Status::InvalidArgument, "quantile of an empty draw set");
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::pair<double, double> equal_tailed_interval(std::span<const double> sorted, double mass) {
  const double tail = (1.0 - mass) / 2.0;
  return {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

ParameterTable summarize(const PosteriorFit& fit, IntervalKind kind, double mass) {
  if (fit.total_draws() == 0) fail(Status::InvalidArgument, "fit has no draws");
  ParameterTable table;
  table.kind = kind;
  table.mass = mass;
  for (std::size_t slot = 0; slot < fit.dimension(); ++slot) {
    ParameterRow row;
    row.name = fit.layout.slots[slot].name;
    std::vector<double> draws = fit.constrained_parameter_draws(static_cast<int>(slot));
    row.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
    std::sort(draws.begin(), draws.end());
    row.median = quantile_sorted(draws, 0.5);
    if (draws.size() < 2) {
      row.lower = row.upper = draws[0];
    } else if (kind == IntervalKind::Hpd) {
      std::tie(row.lower, row.upper) = hpd_interval(draws, mass);
    } else {
      std::tie(row.lower, row.upper) = equal_tailed_interval(draws, mass);
    }
    try {
      row.ess = effective_sample_size(fit.constrained_parameter_chains(static_cast<int>(slot)));
    } catch (const Error&) {
      row.ess = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RankSummary rank_distribution(const PosteriorFit& fit) {
  const std::size_t np = fit.info.players.size();
  const std::size_t total = fit.total_draws();
  if (total == 0) fail(Status::InvalidArgument, "fit has no draws");
  std::vector<std::vector<double>> ranks(np);  // per player, per draw
  for (auto& r : ranks) r.reserve(total);

  std::vector<std::size_t> order(np);
  for (std::size_t c = 0; c < fit.num_chains(); ++c) {
    for (std::size_t d = 0; d < fit.draws_per_chain(); ++d) {
      const auto abilities = player_abilities(fit.info, fit.layout, fit.unconstrained_draw(c, d));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return abilities[a] > abilities[b];  // stable: exact ties keep registry order
      });
      for (std::size_t pos = 0; pos < np; ++pos)
        ranks[order[pos]].push_back(static_cast<double>(pos + 1));
    }
  }

  RankSummary out;
  for (std::size_t p = 0; p < np; ++p) {
    RankRow row;
    row.player = fit.info.players[p];
    auto& rk = ranks[p];
    row.mean_rank = std::accumulate(rk.begin(), rk.end(), 0.0) / static_cast<double>(rk.size());
    std::sort(rk.begin(), rk.end());
    row.median_rank = quantile_sorted(rk, 0.5);
    double ss = 0.0;
    for (double v : rk) ss += (v - row.mean_rank) * (v - row.mean_rank);
    row.sd_rank = rk.size() > 1 ? std::sqrt(ss / static_cast<double>(rk.size() - 1)) : 0.0;
    out.rows.push_back(std::move(row));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const RankRow& a, const RankRow& b) {
    if (a.median_rank != b.median_rank) return a.median_rank < b.median_rank;
    return a.mean_rank < b.mean_rank;
  });
  return out;
}

namespace {

// case-insensitive first, bytewise tiebreak; keeps listing-style ordering for
// mixed-case player names
bool name_less(const std::string& a, const std::string& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int ca = std::tolower(static_cast<unsigned char>(a[i]));
    const int cb = std::tolower(static_cast<unsigned char>(b[i]));
    if (ca != cb) return ca < cb;
  }
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

ProbabilityTable probability_table(const PosteriorFit& fit) {
  const std::size_t total = fit.total_draws();
  if (total == 0) fail(Status::InvalidArgument, "fit has no draws");
  std::vector<std::size_t> by_name(fit.info.players.size());
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) {
    return name_less(fit.info.players[a], fit.info.players[b]);
  });

  ProbabilityTable table;
  table.has_tie_column = fit.info.spec.base == BaseModel::Davidson;
  for (std::size_t a = 0; a < by_name.size(); ++a) {
    for (std::size_t b = a + 1; b < by_name.size(); ++b) {
      const int pi = static_cast<int>(by_name[a]);
      const int pj = static_cast<int>(by_name[b]);
      double sum_i = 0.0, sum_j = 0.0, sum_t = 0.0;
      for (std::size_t c = 0; c < fit.num_chains(); ++c) {
        for (std::size_t d = 0; d < fit.draws_per_chain(); ++d) {
          const auto p =
              pair_probabilities(fit.info, fit.layout, fit.unconstrained_draw(c, d), pi, pj);
          sum_i += p.p_i;
          sum_j += p.p_j;
          sum_t += p.p_tie;
        }
      }
      ProbabilityRow row;
      row.i = fit.info.players[pi];
      row.j = fit.info.players[pj];
      row.p_i = sum_i / static_cast<double>(total);
      row.p_j = sum_j / static_cast<double>(total);
      row.p_tie = sum_t / static_cast<double>(total);
      row.odds = row.p_i / (1.0 - row.p_i);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<PredictRow> predict(const PosteriorFit& fit, const std::vector<PredictRequest>& rows,
                                std::size_t draws_per_row, std::uint64_t seed, bool standardized) {
  const std::size_t total = fit.total_draws();
  if (total == 0) fail(Status::InvalidArgument, "fit has no draws");
  const std::size_t ks = fit.info.subject_cov_names.size();

  auto player_index = [&](const std::string& name) {
    for (std::size_t p = 0; p < fit.info.players.size(); ++p)
      if (fit.info.players[p] == name) return static_cast<int>(p);
    fail(Status::UnknownPlayer, "player '" + name + "' is not part of the fitted model");
  };

  std::size_t use = draws_per_row == 0 ? total : std::min(draws_per_row, total);
  const std::size_t dpc = fit.draws_per_chain();
  Rng rng(seed);
  std::vector<PredictRow> out;
  out.reserve(rows.size());

  for (const auto& req : rows) {
    const int p0 = player_index(req.player0);
    const int p1 = player_index(req.player1);
    if (p0 == p1) fail(Status::InvalidArgument, "prediction pits '" + req.player0 + "' against itself");
    std::vector<double> cov_std;
    if (fit.info.spec.subject_predictors) {
      if (req.covariates.size() != ks)
        fail(Status::MissingCovariate,
             "prediction row carries " + std::to_string(req.covariates.size()) +
                 " covariates, the fit needs " + std::to_string(ks));
      cov_std.resize(ks);
      for (std::size_t k = 0; k < ks; ++k)
        cov_std[k] = standardized ? req.covariates[k]
                                  : (req.covariates[k] - fit.info.subject_cov_mean[k]) /
                                        fit.info.subject_cov_sd[k];
    }

    PredictRow row;
    row.player0 = req.player0;
    row.player1 = req.player1;
    row.draws_used = use;
    for (std::size_t k = 0; k < use; ++k) {
      // deterministic stride over the pooled draws
      const std::size_t idx = (k * total) / use;
      const std::size_t chain = idx / dpc;
      const std::size_t draw = idx % dpc;
      // player1 plays the i role, mirroring the likelihood convention
      const auto p = pair_probabilities(fit.info, fit.layout, fit.unconstrained_draw(chain, draw),
                                        p1, p0, req.order_indicator, cov_std);
      row.p_player1 += p.p_i;
      row.p_player0 += p.p_j;
      row.p_tie += p.p_tie;
      const double u = rng.uniform();
      if (u < p.p_i)
        row.freq_player1 += 1.0;
      else if (u < p.p_i + p.p_j)
        row.freq_player0 += 1.0;
      else
        row.freq_tie += 1.0;
    }
    const double n = static_cast<double>(use);
    row.p_player0 /= n;
    row.p_player1 /= n;
    row.p_tie /= n;
    row.freq_player0 /= n;
    row.freq_player1 /= n;
    row.freq_tie /= n;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace bpc

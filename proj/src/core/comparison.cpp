#include "core/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bpc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double sample_variance(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return x.size() > 1 ? ss / (n - 1.0) : 0.0;
}

double pointwise_se(std::span<const double> pointwise) {
  const double n = static_cast<double>(pointwise.size());
  return std::sqrt(n * sample_variance(pointwise));
}

}  // namespace

PointwiseLogLik pointwise_loglik(const CompiledModel& model, const PosteriorFit& fit) {
  PointwiseLogLik out;
  out.draws = fit.total_draws();
  out.observations = model.dataset().num_contests();
  out.values.resize(out.draws * out.observations);
  std::size_t s = 0;
  for (std::size_t c = 0; c < fit.num_chains(); ++c) {
    for (std::size_t d = 0; d < fit.draws_per_chain(); ++d, ++s) {
      const auto theta = fit.unconstrained_draw(c, d);
      for (std::size_t n = 0; n < out.observations; ++n)
        out.values[s * out.observations + n] = model.contest_log_lik(theta, n);
    }
  }
  return out;
}

IcEstimate waic(const PointwiseLogLik& ll) {
  if (ll.draws < 2) fail(Status::DegenerateDraws, "WAIC needs at least 2 draws");
  IcEstimate est;
  est.draws = ll.draws;
  est.observations = ll.observations;
  est.pointwise.resize(ll.observations);
  est.pointwise_p.resize(ll.observations);
  const double log_s = std::log(static_cast<double>(ll.draws));
  std::vector<double> col(ll.draws);
  for (std::size_t n = 0; n < ll.observations; ++n) {
    for (std::size_t s = 0; s < ll.draws; ++s) col[s] = ll.at(s, n);
    const double lppd = log_sum_exp(col) - log_s;
    const double p = sample_variance(col);
    est.pointwise[n] = lppd - p;
    est.pointwise_p[n] = p;
    est.elpd += lppd - p;
    est.p_eff += p;
  }
  est.ic = -2.0 * est.elpd;
  est.se = pointwise_se(est.pointwise);
  est.p_se = pointwise_se(est.pointwise_p);
  return est;
}

std::pair<double, double> fit_generalized_pareto(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 5) fail(Status::TooFewTailSamples, "generalized Pareto fit needs at least 5 tail values");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) fail(Status::InvalidArgument, "tail values must be positive");
    if (i > 0 && x[i] < x[i - 1]) fail(Status::InvalidArgument, "tail values must be sorted");
  }

  const std::size_t m = 30 + static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const double quart = x[static_cast<std::size_t>(std::floor(static_cast<double>(n) / 4.0 + 0.5)) - 1];
  const double x_max = x[n - 1];
  constexpr double prior = 3.0;

  std::vector<double> b(m), prof(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double jj = static_cast<double>(j) + 1.0;
    b[j] = 1.0 / x_max + (1.0 - std::sqrt(static_cast<double>(m) / (jj - 0.5))) / (prior * quart);
    double k = 0.0;
    for (double v : x) k += std::log1p(-b[j] * v);
    k /= static_cast<double>(n);
    prof[j] = (b[j] == 0.0 || k == 0.0)
                  ? -std::numeric_limits<double>::infinity()
                  : static_cast<double>(n) * (std::log(-b[j] / k) - k - 1.0);
  }
  const double lse = log_sum_exp(prof);
  double b_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) b_hat += b[j] * std::exp(prof[j] - lse);

  double khat = 0.0;
  for (double v : x) khat += std::log1p(-b_hat * v);
  khat /= static_cast<double>(n);
  const double sigma = -khat / b_hat;
  // weakly informative shrink of the shape toward 0.5
  khat = khat * static_cast<double>(n) / (static_cast<double>(n) + 10.0) +
         0.5 * 10.0 / (static_cast<double>(n) + 10.0);
  return {khat, sigma};
}

double gpd_quantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma / k * (std::pow(1.0 - p, -k) - 1.0);
}

PsisSmoothed psis_smooth(std::span<const double> log_ratios) {
  const std::size_t s = log_ratios.size();
  PsisSmoothed out;
  out.log_weights.assign(log_ratios.begin(), log_ratios.end());
  out.khat = kNaN;

  const std::size_t tail =
      static_cast<std::size_t>(std::floor(std::min(0.2 * static_cast<double>(s),
                                                   3.0 * std::sqrt(static_cast<double>(s)))));
  if (tail < 5) return out;

  const double lw_max = *std::max_element(out.log_weights.begin(), out.log_weights.end());
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return out.log_weights[a] < out.log_weights[b]; });

  // shift to r = exp(lw - max) in (0, 1]; shape and normalized weights are
  // scale invariant so the shift is free
  const double cutoff = std::exp(out.log_weights[order[s - tail - 1]] - lw_max);
  std::vector<double> exceed;
  exceed.reserve(tail);
  for (std::size_t t = s - tail; t < s; ++t) {
    const double r = std::exp(out.log_weights[order[t]] - lw_max);
    if (r > cutoff) exceed.push_back(r - cutoff);
  }
  if (exceed.size() < 5) return out;  // degenerate tail (mass of ties) stays unsmoothed

  double khat, sigma;
  std::sort(exceed.begin(), exceed.end());
  std::tie(khat, sigma) = fit_generalized_pareto(exceed);
  out.khat = khat;

  // expected order statistics of the fitted tail, truncated at the raw max
  const double tail_n = static_cast<double>(tail);
  for (std::size_t z = 0; z < tail; ++z) {
    const double q = cutoff + gpd_quantile((static_cast<double>(z) + 0.5) / tail_n, khat, sigma);
    out.log_weights[order[s - tail + z]] = std::log(std::min(q, 1.0)) + lw_max;
  }
  return out;
}

IcEstimate psis_loo(const PointwiseLogLik& ll) {
  if (ll.draws < 2) fail(Status::DegenerateDraws, "PSIS-LOO needs at least 2 draws");
  IcEstimate est;
  est.draws = ll.draws;
  est.observations = ll.observations;
  est.smoothed = ll.draws >= 50;
  est.pointwise.resize(ll.observations);
  est.pointwise_p.resize(ll.observations);
  est.pareto_k.assign(ll.observations, kNaN);
  const double log_s = std::log(static_cast<double>(ll.draws));

  double mcse_sq = 0.0;
  bool mcse_ok = est.smoothed;

  std::vector<double> col(ll.draws), lw(ll.draws), lwp(ll.draws);
  for (std::size_t n = 0; n < ll.observations; ++n) {
    for (std::size_t s = 0; s < ll.draws; ++s) {
      col[s] = ll.at(s, n);
      lw[s] = -col[s];  // raw log importance ratios
    }
    double khat = kNaN;
    if (est.smoothed) {
      PsisSmoothed sm = psis_smooth(lw);
      lw = std::move(sm.log_weights);
      khat = sm.khat;
    }
    est.pareto_k[n] = khat;

    for (std::size_t s = 0; s < ll.draws; ++s) lwp[s] = lw[s] + col[s];
    const double log_norm = log_sum_exp(lw);
    const double elpd_n = log_sum_exp(lwp) - log_norm;
    est.pointwise[n] = elpd_n;
    est.elpd += elpd_n;
    const double lppd = log_sum_exp(col) - log_s;
    est.pointwise_p[n] = lppd - elpd_n;
    est.p_eff += lppd - elpd_n;

    if (mcse_ok && (!std::isfinite(khat) || khat > 0.7)) mcse_ok = false;
    if (mcse_ok && !(std::exp(elpd_n) > 0.0)) mcse_ok = false;
    if (mcse_ok) {
      const double mu = std::exp(elpd_n);
      double var_hat = 0.0;
      for (std::size_t s = 0; s < ll.draws; ++s) {
        const double wn = std::exp(lw[s] - log_norm);
        const double p = std::exp(col[s]);
        var_hat += wn * wn * (p - mu) * (p - mu);
      }
      mcse_sq += var_hat / (mu * mu);
    }
  }
  est.ic = -2.0 * est.elpd;
  est.se = pointwise_se(est.pointwise);
  est.mcse = mcse_ok ? std::sqrt(mcse_sq) : kNaN;
  return est;
}

std::vector<CompareRow> compare_models(const std::vector<IcEstimate>& estimates,
                                       const std::vector<std::string>& names) {
  if (estimates.empty() || estimates.size() != names.size())
    fail(Status::InvalidArgument, "compare needs one name per estimate");
  const std::size_t n_obs = estimates[0].observations;
  for (const auto& e : estimates)
    if (e.observations != n_obs)
      fail(Status::InvalidArgument,
           "models were scored on different observation counts and cannot be compared");

  std::vector<std::size_t> order(estimates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return estimates[a].elpd > estimates[b].elpd; });

  const IcEstimate& best = estimates[order[0]];
  std::vector<CompareRow> rows;
  for (std::size_t idx : order) {
    const IcEstimate& e = estimates[idx];
    CompareRow row;
    row.name = names[idx];
    row.elpd = e.elpd;
    row.se = e.se;
    row.p_eff = e.p_eff;
    row.ic = e.ic;
    row.elpd_diff = e.elpd - best.elpd;
    if (&e == &best) {
      row.se_diff = 0.0;
    } else {
      std::vector<double> diff(n_obs);
      for (std::size_t i = 0; i < n_obs; ++i) diff[i] = best.pointwise[i] - e.pointwise[i];
      row.se_diff = pointwise_se(diff);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bpc

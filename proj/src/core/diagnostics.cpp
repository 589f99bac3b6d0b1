#include "core/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bpc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

std::size_t common_length(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) fail(Status::InvalidArgument, "at least one chain is required");
  std::size_t n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  return n;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::size_t n = common_length(chains);
  if (n < 4) fail(Status::InvalidArgument, "split R-hat needs at least 4 draws per chain");
  if (n % 2 == 1) --n;  // drop the final draw of odd chains
  const std::size_t half = n / 2;

  std::vector<double> means, vars;
  for (const auto& chain : chains) {
    for (int part = 0; part < 2; ++part) {
      std::vector<double> seg(chain.begin() + part * half, chain.begin() + (part + 1) * half);
      const double m = mean_of(seg);
      means.push_back(m);
      vars.push_back(sample_var(seg, m));
    }
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) fail(Status::ZeroVariance, "split R-hat undefined: zero within-chain variance");
  const double grand = mean_of(means);
  const double b = static_cast<double>(half) * sample_var(means, grand);
  const double var_plus =
      (static_cast<double>(half) - 1.0) / static_cast<double>(half) * w + b / static_cast<double>(half);
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const std::size_t n = common_length(chains);
  if (n < 4) fail(Status::InvalidArgument, "ESS needs at least 4 draws per chain");
  const std::size_t m = chains.size();

  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    std::vector<double> head(chains[c].begin(), chains[c].begin() + n);
    vars[c] = sample_var(head, means[c]);
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) fail(Status::ZeroVariance, "ESS undefined: zero within-chain variance");
  double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w;
  if (m > 1) {
    const double grand = mean_of(means);
    var_plus += sample_var(means, grand);  // B/n = var of chain means
  }

  // mean autocovariance across chains at lag t (biased 1/n scaling)
  auto mean_acov = [&](std::size_t t) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = chains[c];
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - means[c]) * (x[i + t] - means[c]);
      acc += s / static_cast<double>(n);
    }
    return acc / static_cast<double>(m);
  };
  auto rho = [&](std::size_t t) { return 1.0 - (w - mean_acov(t)) / var_plus; };

  double pair_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    const double r_even = t == 0 ? 1.0 : rho(t);
    const double r_odd = rho(t + 1);
    double pair = r_even + r_odd;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decay
    pair_sum += pair;
    prev_pair = pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum;
  const double total = static_cast<double>(m) * static_cast<double>(n);
  const double cap = 1.5 * total;
  if (!(tau > 0.0)) return cap;
  return std::min(total / tau, cap);
}

double ebfmi(const std::vector<double>& energies) {
  if (energies.size() < 3) fail(Status::InvalidArgument, "E-BFMI needs at least 3 energies");
  const double mean = mean_of(energies);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < energies.size(); ++i) {
    const double d = energies[i] - energies[i - 1];
    num += d * d;
  }
  for (double e : energies) den += (e - mean) * (e - mean);
  if (!(den > 0.0)) fail(Status::ZeroVariance, "E-BFMI undefined: constant energy");
  return num / den;
}

ConvergenceReport convergence_report(const PosteriorFit& fit, const DiagnosticsOptions& opts) {
  if (fit.total_draws() == 0) fail(Status::InvalidArgument, "fit has no post-warmup draws");
  ConvergenceReport rep;
  rep.thresholds = opts;
  rep.divergent = fit.total_divergent();
  rep.treedepth_hits = fit.total_treedepth_hits();
  rep.max_treedepth = fit.config.max_treedepth;
  rep.total_transitions = fit.total_draws();

  for (std::size_t slot = 0; slot < fit.dimension(); ++slot) {
    ParamDiagnostic pd;
    pd.name = fit.layout.slots[slot].name;
    const auto chains = fit.constrained_parameter_chains(static_cast<int>(slot));
    try {
      pd.rhat = split_rhat(chains);
    } catch (const Error&) {
      pd.rhat = kNaN;
    }
    try {
      pd.ess = effective_sample_size(chains);
    } catch (const Error&) {
      pd.ess = kNaN;
    }
    rep.params.push_back(std::move(pd));
  }
  for (const auto& chain : fit.chains) {
    std::vector<double> energies(chain.stats.size());
    for (std::size_t i = 0; i < chain.stats.size(); ++i) energies[i] = chain.stats[i].energy;
    try {
      rep.ebfmi_per_chain.push_back(ebfmi(energies));
    } catch (const Error&) {
      rep.ebfmi_per_chain.push_back(kNaN);
    }
  }
  return rep;
}

std::vector<std::string> ConvergenceReport::problems() const {
  std::vector<std::string> out;
  std::ostringstream ss;
  if (treedepth_hits > 0) {
    ss.str("");
    ss << treedepth_hits << " of " << total_transitions << " transitions hit the maximum treedepth of "
       << max_treedepth << ".";
    out.push_back(ss.str());
  }
  if (divergent > 0) {
    ss.str("");
    ss << divergent << " of " << total_transitions << " transitions ended with a divergence.";
    out.push_back(ss.str());
  }
  for (std::size_t c = 0; c < ebfmi_per_chain.size(); ++c) {
    const double v = ebfmi_per_chain[c];
    ss.str("");
    if (std::isnan(v)) {
      ss << "E-BFMI of chain " << c + 1 << " is undefined (constant energy).";
      out.push_back(ss.str());
    } else if (v < thresholds.ebfmi_threshold) {
      ss << "E-BFMI of chain " << c + 1 << " is " << v << ", below the threshold of "
         << thresholds.ebfmi_threshold << ".";
      out.push_back(ss.str());
    }
  }
  for (const auto& p : params) {
    if (std::isnan(p.ess)) {
      out.push_back("Effective sample size of parameter " + p.name + " is undefined (zero variance).");
    } else if (p.ess < thresholds.ess_threshold) {
      ss.str("");
      ss << "Effective sample size of parameter " << p.name << " is " << p.ess
         << ", below the threshold of " << thresholds.ess_threshold << ".";
      out.push_back(ss.str());
    }
  }
  for (const auto& p : params) {
    if (std::isnan(p.rhat)) {
      out.push_back("Split R-hat of parameter " + p.name + " is undefined (zero variance).");
    } else if (p.rhat >= thresholds.rhat_threshold) {
      ss.str("");
      ss << "Split R-hat of parameter " << p.name << " is " << p.rhat << ", above the threshold of "
         << thresholds.rhat_threshold << ".";
      out.push_back(ss.str());
    }
  }
  return out;
}

std::string render_convergence_report(const ConvergenceReport& rep) {
  std::ostringstream out;
  const auto issues = rep.problems();
  auto section = [&](const std::string& heading, bool ok, const std::string& ok_line,
                     const std::string& needle) {
    out << heading << "\n";
    if (ok) {
      out << ok_line << "\n\n";
      return;
    }
    for (const auto& line : issues)
      if (line.find(needle) != std::string::npos) out << line << "\n";
    out << "\n";
  };

  section("Checking sampler transitions treedepth.", rep.treedepth_hits == 0,
          "Treedepth satisfactory for all transitions.", "treedepth");
  section("Checking sampler transitions for divergences.", rep.divergent == 0,
          "No divergent transitions found.", "divergence");
  bool ebfmi_ok = true;
  for (double v : rep.ebfmi_per_chain)
    if (std::isnan(v) || v < rep.thresholds.ebfmi_threshold) ebfmi_ok = false;
  section("Checking E-BFMI - sampler transitions HMC potential energy.", ebfmi_ok,
          "E-BFMI satisfactory for all transitions.", "E-BFMI");
  bool ess_ok = true, rhat_ok = true;
  for (const auto& p : rep.params) {
    if (std::isnan(p.ess) || p.ess < rep.thresholds.ess_threshold) ess_ok = false;
    if (std::isnan(p.rhat) || p.rhat >= rep.thresholds.rhat_threshold) rhat_ok = false;
  }
  if (ess_ok) {
    out << "Effective sample size satisfactory.\n\n";
  } else {
    for (const auto& line : issues)
      if (line.find("Effective sample size") != std::string::npos) out << line << "\n";
    out << "\n";
  }
  if (rhat_ok) {
    out << "Split R-hat values satisfactory all parameters.\n\n";
  } else {
    for (const auto& line : issues)
      if (line.find("Split R-hat") != std::string::npos) out << line << "\n";
    out << "\n";
  }
  if (issues.empty())
    out << "Processing complete, no problems detected.\n";
  else
    out << "Processing complete, " << issues.size() << " problem" << (issues.size() == 1 ? "" : "s")
        << " detected.\n";
  return out.str();
}

}  // namespace bpc

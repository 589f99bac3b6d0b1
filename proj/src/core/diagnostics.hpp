#pragma once

#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/fit.hpp"

namespace bpc {

// Split R-hat (Gelman-Rubin, split variant): chains are truncated to the
// shortest length (dropping the final draw when odd), halved, and
// sqrt(((n-1)/n W + B/n) / W) is computed over the half-chains.
// Throws ZeroVariance when the within-chain variance vanishes.
double split_rhat(const std::vector<std::vector<double>>& chains);

// ESS = (chains * draws) / (1 + 2 sum rho_t) with per-chain autocovariances
// combined across chains and the sum truncated by Geyer's initial monotone
// positive-pair sequence.  Clamped to (0, 1.5 * total draws].
double effective_sample_size(const std::vector<std::vector<double>>& chains);

// Energy fraction of missing information for one chain of Hamiltonian values:
// sum of squared first differences over the centered sum of squares.
double ebfmi(const std::vector<double>& energies);

struct DiagnosticsOptions {
  double rhat_threshold = 1.01;
  double ess_threshold = 200.0;
  double ebfmi_threshold = 0.2;
};

struct ParamDiagnostic {
  std::string name;
  double rhat = 0.0;  // NaN when undefined (zero variance)
  double ess = 0.0;
};

struct ConvergenceReport {
  std::vector<ParamDiagnostic> params;
  std::vector<double> ebfmi_per_chain;  // NaN when undefined
  int divergent = 0;
  int treedepth_hits = 0;
  int max_treedepth = 10;
  std::size_t total_transitions = 0;
  DiagnosticsOptions thresholds;

  std::vector<std::string> problems() const;
  bool pass() const { return problems().empty(); }
};

ConvergenceReport convergence_report(const PosteriorFit& fit, const DiagnosticsOptions& opts = {});

// Plain-text report, one block per check, ending in the overall verdict line.
std::string render_convergence_report(const ConvergenceReport& report);

}  // namespace bpc

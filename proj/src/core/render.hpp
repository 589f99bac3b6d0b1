#pragma once

#include <string>
#include <vector>

#include "core/comparison.hpp"
#include "core/diagnostics.hpp"
#include "core/posterior.hpp"

namespace bpc {

enum class OutputFormat : int { Text = 0, Csv = 1, Json = 2 };

OutputFormat parse_format(const std::string& s);

struct TableOptions {
  OutputFormat format = OutputFormat::Text;
  IntervalKind interval = IntervalKind::Hpd;
  double mass = 0.95;
  int digits = 2;  // decimals in text tables; csv/json always carry 12 significant digits
};

std::string render_parameters(const ParameterTable& table, const TableOptions& opts);
std::string render_probabilities(const ProbabilityTable& table, const TableOptions& opts);
std::string render_ranks(const RankSummary& ranks, const TableOptions& opts);

// The full summary page: parameter estimates, posterior win probabilities and
// the posterior rank table.
std::string render_summary(const PosteriorFit& fit, const TableOptions& opts);

// "waic" or "loo" block in the Estimate/SE layout.
std::string render_ic(const IcEstimate& est, bool loo, OutputFormat format);

std::string render_compare(const std::vector<CompareRow>& rows, bool loo, OutputFormat format);

std::string render_predict(const std::vector<PredictRow>& rows, bool has_ties,
                           const TableOptions& opts);

// Long-format draws (parameter, chain, draw, value) for external plotting.
std::string render_plotdata(const PosteriorFit& fit, const std::vector<std::string>& params);

std::string render_diagnostics(const ConvergenceReport& report, OutputFormat format);

}  // namespace bpc

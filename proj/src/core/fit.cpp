#include "core/fit.hpp"

#include <cmath>

namespace bpc {

std::vector<std::vector<double>> PosteriorFit::constrained_parameter_chains(int slot) const {
  const std::size_t dim = dimension();
  const auto& sl = layout.slots[slot];
  std::vector<std::vector<double>> out(num_chains());
  for (std::size_t c = 0; c < num_chains(); ++c) {
    const std::size_t n = chains[c].stats.size();
    out[c].resize(n);
    for (std::size_t d = 0; d < n; ++d) {
      const double* row = chains[c].draws.data() + d * dim;
      double v = row[slot];
      if (sl.block == ParamBlock::LogUStd)
        v = std::exp(v);
      else if (sl.block == ParamBlock::RawU)
        v *= std::exp(row[layout.log_ustd_offset]);
      out[c][d] = v;
    }
  }
  return out;
}

std::vector<double> PosteriorFit::constrained_parameter_draws(int slot) const {
  std::vector<double> flat;
  flat.reserve(total_draws());
  for (auto& chain : constrained_parameter_chains(slot))
    flat.insert(flat.end(), chain.begin(), chain.end());
  return flat;
}

int PosteriorFit::total_divergent() const {
  int n = 0;
  for (const auto& c : chains) n += c.divergent_count;
  return n;
}

int PosteriorFit::total_treedepth_hits() const {
  int n = 0;
  for (const auto& c : chains) n += c.treedepth_hit_count;
  return n;
}

PosteriorFit sample(const CompiledModel& model, const SamplerConfig& config) {
  PosteriorFit fit;
  fit.info = model.info();
  fit.layout = model.layout();
  fit.config = config;
  fit.chains = run_nuts(model, config);
  return fit;
}

}  // namespace bpc

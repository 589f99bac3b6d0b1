#pragma once

#include "core/csv.hpp"
#include "core/model.hpp"
#include "core/sampler.hpp"

namespace bpc {

// Multi-chain posterior draws plus everything needed to summarize them after
// the original data file is gone.  `ingest` records how the dataset was
// loaded so data-dependent operations (pointwise log-likelihood) can reload
// and fingerprint-check it.
struct PosteriorFit {
  FitModelInfo info;
  ParameterLayout layout;
  SamplerConfig config;
  IngestSpec ingest;
  std::vector<ChainResult> chains;

  std::size_t dimension() const { return layout.dimension(); }
  std::size_t num_chains() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains[0].stats.size(); }
  std::size_t total_draws() const { return num_chains() * draws_per_chain(); }

  std::span<const double> unconstrained_draw(std::size_t chain, std::size_t draw) const {
    const std::size_t dim = dimension();
    return {chains[chain].draws.data() + draw * dim, dim};
  }
  std::vector<double> constrained_draw(std::size_t chain, std::size_t draw) const {
    return layout.constrain(unconstrained_draw(chain, draw));
  }

  // One sequence per chain of the constrained value of a single slot.
  std::vector<std::vector<double>> constrained_parameter_chains(int slot) const;
  // All constrained values of one slot, chains concatenated in index order.
  std::vector<double> constrained_parameter_draws(int slot) const;

  int total_divergent() const;
  int total_treedepth_hits() const;
};

PosteriorFit sample(const CompiledModel& model, const SamplerConfig& config);

}  // namespace bpc

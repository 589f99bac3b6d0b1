#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "core/common.hpp"
#include "core/model.hpp"

namespace bpc {

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;  // 0 disables adaptation; otherwise must be >= 150
  int draws = 2000;   // post-warmup iterations per chain
  double target_accept = 0.8;
  int max_treedepth = 10;
  std::uint64_t seed = 0;
  double init_radius = 2.0;  // uniform init on [-r, r] per coordinate
  int threads = 0;           // 0 = BPC_THREADS env var, else hardware count
  double init_step_size = 1.0;   // adaptation start; the fixed step when warmup == 0
  double step_size_scale = 1.0;  // post-adaptation multiplier (divergence experiments)

  void validate() const;
  int resolve_threads() const;
};

struct TransitionStats {
  double energy = 0.0;       // Hamiltonian of the selected point
  double accept_stat = 0.0;  // mean Metropolis acceptance over the trajectory
  int treedepth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

struct ChainResult {
  std::vector<double> draws;  // draws x dim, row-major, unconstrained scale
  std::vector<TransitionStats> stats;
  double step_size = 0.0;
  std::vector<double> inv_mass;
  int divergent_count = 0;
  int treedepth_hit_count = 0;
};

// One leapfrog step: half-step momentum, full-step position
// (theta += eps * inv_mass o r), half-step momentum.
void leapfrog(std::span<double> theta, std::span<double> r, double eps,
              const std::function<void(std::span<const double>, std::span<double>)>& grad_fn,
              std::span<const double> inv_mass);

// Multi-chain No-U-Turn sampler with dual-averaging step-size adaptation and
// windowed diagonal mass-matrix estimation.  Deterministic given (seed, chain
// index); chains may run on separate threads and are merged by index.
std::vector<ChainResult> run_nuts(const LogDensity& target, const SamplerConfig& config);

}  // namespace bpc

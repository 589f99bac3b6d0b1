#include "core/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "core/rng.hpp"

namespace bpc {

void SamplerConfig::validate() const {
  if (chains < 1) fail(Status::InvalidArgument, "chains must be >= 1");
  if (draws < 1) fail(Status::InvalidArgument, "draws must be >= 1");
  if (warmup != 0 && warmup < 150)
    fail(Status::InvalidArgument, "warmup must be 0 (no adaptation) or >= 150");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    fail(Status::InvalidArgument, "target_accept must lie in (0, 1)");
  if (max_treedepth < 1) fail(Status::InvalidArgument, "max_treedepth must be >= 1");
  if (!(init_radius >= 0.0)) fail(Status::InvalidArgument, "init_radius must be >= 0");
  if (!(init_step_size > 0.0)) fail(Status::InvalidArgument, "init_step_size must be > 0");
  if (!(step_size_scale > 0.0)) fail(Status::InvalidArgument, "step_size_scale must be > 0");
}

int SamplerConfig::resolve_threads() const {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("BPC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void leapfrog(std::span<double> theta, std::span<double> r, double eps,
              const std::function<void(std::span<const double>, std::span<double>)>& grad_fn,
              std::span<const double> inv_mass) {
  const std::size_t dim = theta.size();
  std::vector<double> grad(dim);
  grad_fn(theta, grad);
  for (std::size_t d = 0; d < dim; ++d) r[d] += 0.5 * eps * grad[d];
  for (std::size_t d = 0; d < dim; ++d) theta[d] += eps * inv_mass[d] * r[d];
  grad_fn(theta, grad);
  for (std::size_t d = 0; d < dim; ++d) r[d] += 0.5 * eps * grad[d];
}

namespace {

constexpr double kMaxEnergyError = 1000.0;

struct Phase {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

// Running mean/variance per coordinate for the mass-matrix windows.
struct Welford {
  std::vector<double> mean, m2;
  long n = 0;
  void reset(std::size_t dim) {
    mean.assign(dim, 0.0);
    m2.assign(dim, 0.0);
    n = 0;
  }
  void add(const std::vector<double>& x) {
    ++n;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double delta = x[d] - mean[d];
      mean[d] += delta / static_cast<double>(n);
      m2[d] += delta * (x[d] - mean[d]);
    }
  }
};

struct DualAveraging {
  double delta = 0.8;
  double mu = 0.0, s_bar = 0.0, x_bar = 0.0, log_eps = 0.0;
  long counter = 0;
  static constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    s_bar = 0.0;
    x_bar = 0.0;
    counter = 0;
  }
  double learn(double accept) {
    ++counter;
    const double eta = 1.0 / (static_cast<double>(counter) + kT0);
    s_bar = (1.0 - eta) * s_bar + eta * (delta - accept);
    log_eps = mu - s_bar * std::sqrt(static_cast<double>(counter)) / kGamma;
    const double x_eta = std::pow(static_cast<double>(counter), -kKappa);
    x_bar = (1.0 - x_eta) * x_bar + x_eta * log_eps;
    return std::exp(log_eps);
  }
  double adapted() const { return std::exp(x_bar); }
  double current() const { return std::exp(log_eps); }
};

struct Subtree {
  Phase lo, hi;    // backward / forward extremes in trajectory orientation
  Phase proposal;  // multinomial sample within the subtree
  double log_weight = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leap = 0;
  bool valid = false;
  bool divergent = false;
};

class NutsChain {
 public:
  NutsChain(const LogDensity& target, const SamplerConfig& cfg, int chain_index)
      : target_(target),
        cfg_(cfg),
        rng_(cfg.seed ^ static_cast<std::uint64_t>(chain_index)),
        dim_(target.dimension()),
        inv_mass_(target.dimension(), 1.0) {}

  ChainResult run() {
    Phase cur = initialize();
    double eps = cfg_.init_step_size;

    if (cfg_.warmup > 0) {
      eps = find_reasonable_epsilon(cur, eps);
      da_.delta = cfg_.target_accept;
      da_.restart(eps);
      const auto windows = slow_windows();
      std::size_t next_window = 0;
      Welford acc;
      acc.reset(dim_);
      for (int it = 0; it < cfg_.warmup; ++it) {
        TransitionStats ts;
        transition(cur, eps, ts);
        eps = da_.learn(ts.accept_stat);
        const bool in_slow = next_window < windows.size() && it >= windows[next_window].first &&
                             it < windows[next_window].second;
        if (in_slow) acc.add(cur.q);
        if (next_window < windows.size() && it + 1 == windows[next_window].second) {
          update_inv_mass(acc);
          acc.reset(dim_);
          ++next_window;
          eps = find_reasonable_epsilon(cur, da_.current());
          da_.restart(eps);
        }
      }
      eps = da_.adapted();
    }
    eps *= cfg_.step_size_scale;

    ChainResult out;
    out.step_size = eps;
    out.inv_mass = inv_mass_;
    out.draws.resize(static_cast<std::size_t>(cfg_.draws) * dim_);
    out.stats.resize(cfg_.draws);
    for (int it = 0; it < cfg_.draws; ++it) {
      TransitionStats ts;
      transition(cur, eps, ts);
      std::copy(cur.q.begin(), cur.q.end(), out.draws.begin() + static_cast<std::size_t>(it) * dim_);
      out.stats[it] = ts;
      if (ts.divergent) ++out.divergent_count;
      if (ts.treedepth >= cfg_.max_treedepth) ++out.treedepth_hit_count;
    }
    if (out.divergent_count > 0.9 * cfg_.draws)
      fail(Status::AllDivergent,
           std::to_string(out.divergent_count) + " of " + std::to_string(cfg_.draws) +
               " transitions diverged; the posterior geometry defeats the current step size "
               "(try a higher target_accept or tighter priors)");
    return out;
  }

 private:
  double eval(Phase& ph) {
    ph.logp = target_.log_density_gradient(ph.q, ph.grad);
    return ph.logp;
  }

  bool grad_finite(const Phase& ph) const {
    for (double g : ph.grad)
      if (!std::isfinite(g)) return false;
    return true;
  }

  Phase initialize() {
    Phase ph;
    ph.q.assign(dim_, 0.0);
    ph.p.assign(dim_, 0.0);
    ph.grad.assign(dim_, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (std::size_t d = 0; d < dim_; ++d)
        ph.q[d] = rng_.uniform(-cfg_.init_radius, cfg_.init_radius);
      eval(ph);
      if (std::isfinite(ph.logp) && grad_finite(ph)) return ph;
    }
    fail(Status::NonFiniteInit,
         "no finite initial point found after 100 draws from the init window");
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) k += p[d] * p[d] * inv_mass_[d];
    return 0.5 * k;
  }

  void leap(Phase& ph, double eps) {
    for (std::size_t d = 0; d < dim_; ++d) ph.p[d] += 0.5 * eps * ph.grad[d];
    for (std::size_t d = 0; d < dim_; ++d) ph.q[d] += eps * inv_mass_[d] * ph.p[d];
    eval(ph);
    for (std::size_t d = 0; d < dim_; ++d) ph.p[d] += 0.5 * eps * ph.grad[d];
  }

  void draw_momentum(Phase& ph) {
    for (std::size_t d = 0; d < dim_; ++d) ph.p[d] = rng_.normal() / std::sqrt(inv_mass_[d]);
  }

  bool uturn(const Phase& lo, const Phase& hi) const {
    double d_lo = 0.0, d_hi = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double dq = hi.q[d] - lo.q[d];
      d_lo += dq * inv_mass_[d] * lo.p[d];
      d_hi += dq * inv_mass_[d] * hi.p[d];
    }
    return d_lo < 0.0 || d_hi < 0.0;
  }

  Subtree build_tree(const Phase& from, int depth, int dir, double eps, double h0) {
    Subtree st;
    if (depth == 0) {
      Phase ph = from;
      leap(ph, dir * eps);
      const double h = std::isfinite(ph.logp) ? -ph.logp + kinetic(ph.p)
                                              : std::numeric_limits<double>::infinity();
      const double err = h - h0;
      st.n_leap = 1;
      st.divergent = !std::isfinite(err) || err > kMaxEnergyError;
      st.valid = !st.divergent;
      st.log_weight = st.divergent ? -std::numeric_limits<double>::infinity() : -err;
      st.sum_accept = std::isfinite(err) ? std::min(1.0, std::exp(-err)) : 0.0;
      st.lo = ph;
      st.hi = std::move(ph);
      st.proposal = st.hi;
      return st;
    }
    Subtree first = build_tree(from, depth - 1, dir, eps, h0);
    if (!first.valid) return first;
    Subtree second = build_tree(dir > 0 ? first.hi : first.lo, depth - 1, dir, eps, h0);
    st.n_leap = first.n_leap + second.n_leap;
    st.sum_accept = first.sum_accept + second.sum_accept;
    st.divergent = first.divergent || second.divergent;
    if (!second.valid) {
      st.valid = false;
      return st;
    }
    st.log_weight = log_sum_exp2(first.log_weight, second.log_weight);
    const double p_second = std::exp(second.log_weight - st.log_weight);
    st.proposal = rng_.uniform() < p_second ? std::move(second.proposal) : std::move(first.proposal);
    st.lo = dir > 0 ? std::move(first.lo) : std::move(second.lo);
    st.hi = dir > 0 ? std::move(second.hi) : std::move(first.hi);
    st.valid = !uturn(st.lo, st.hi);
    return st;
  }

  static double log_sum_exp2(double a, double b) {
    const double m = std::max(a, b);
    if (!std::isfinite(m)) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }

  void transition(Phase& cur, double eps, TransitionStats& ts) {
    draw_momentum(cur);
    const double h0 = -cur.logp + kinetic(cur.p);

    Phase lo = cur, hi = cur;
    Phase proposal = cur;
    double energy = h0;
    double log_w_total = 0.0;
    double sum_accept = 0.0;
    int n_leap = 0;
    bool divergent = false;
    int depth = 0;

    while (depth < cfg_.max_treedepth) {
      const int dir = rng_.flip() ? 1 : -1;
      Subtree st = build_tree(dir > 0 ? hi : lo, depth, dir, eps, h0);
      sum_accept += st.sum_accept;
      n_leap += st.n_leap;
      divergent = divergent || st.divergent;
      if (!st.valid) break;
      // biased progressive sampling toward the fresh subtree
      if (std::log(rng_.uniform_pos()) < st.log_weight - log_w_total) {
        proposal = st.proposal;
        energy = -proposal.logp + kinetic(proposal.p);
      }
      log_w_total = log_sum_exp2(log_w_total, st.log_weight);
      if (dir > 0)
        hi = std::move(st.hi);
      else
        lo = std::move(st.lo);
      ++depth;
      if (uturn(lo, hi)) break;
    }

    cur.q = proposal.q;
    cur.grad = proposal.grad;
    cur.logp = proposal.logp;
    ts.energy = energy;
    ts.accept_stat = n_leap > 0 ? sum_accept / n_leap : 1.0;
    ts.treedepth = depth;
    ts.n_leapfrog = n_leap;
    ts.divergent = divergent;
  }

  double find_reasonable_epsilon(const Phase& start, double eps0) {
    double eps = std::clamp(eps0, 1e-10, 1e7);
    Phase base = start;
    draw_momentum(base);
    const double h0 = -base.logp + kinetic(base.p);
    auto accept_with = [&](double e) {
      Phase ph = base;
      leap(ph, e);
      if (!std::isfinite(ph.logp)) return 0.0;
      const double h = -ph.logp + kinetic(ph.p);
      if (!std::isfinite(h)) return 0.0;
      return std::exp(h0 - h);
    };
    double ratio = accept_with(eps);
    const double dir = ratio > 0.5 ? 1.0 : -1.0;
    for (int it = 0; it < 100; ++it) {
      if (std::pow(ratio, dir) <= std::pow(2.0, -dir)) break;
      eps *= dir > 0 ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-10) break;
      ratio = accept_with(eps);
    }
    return std::clamp(eps, 1e-10, 1e7);
  }

  // Expanding slow windows between a 75-iteration fast head and a
  // 50-iteration fast tail; the last window absorbs the remainder.
  std::vector<std::pair<int, int>> slow_windows() const {
    constexpr int kInit = 75, kTerm = 50, kBase = 25;
    std::vector<std::pair<int, int>> windows;
    const int slow_end = cfg_.warmup - kTerm;
    int pos = kInit;
    int w = kBase;
    while (pos < slow_end) {
      int end = pos + w;
      if (end + 2 * w > slow_end) end = slow_end;
      windows.emplace_back(pos, end);
      pos = end;
      w *= 2;
    }
    return windows;
  }

  void update_inv_mass(const Welford& acc) {
    if (acc.n < 2) return;
    const double n = static_cast<double>(acc.n);
    for (std::size_t d = 0; d < dim_; ++d) {
      const double var = acc.m2[d] / (n - 1.0);
      inv_mass_[d] = std::max(n / (n + 5.0) * var + 1e-3 * (5.0 / (n + 5.0)), 1e-10);
    }
  }

  const LogDensity& target_;
  const SamplerConfig& cfg_;
  Rng rng_;
  std::size_t dim_;
  std::vector<double> inv_mass_;
  DualAveraging da_;
};

}  // namespace

std::vector<ChainResult> run_nuts(const LogDensity& target, const SamplerConfig& config) {
  config.validate();
  if (target.dimension() < 1) fail(Status::InvalidArgument, "target dimension must be >= 1");

  const int n_chains = config.chains;
  std::vector<ChainResult> results(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  const int n_threads = std::min(config.resolve_threads(), n_chains);

  if (n_threads <= 1) {
    for (int c = 0; c < n_chains; ++c) {
      NutsChain chain(target, config, c);
      results[c] = chain.run();
    }
    return results;
  }

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chains) return;
      try {
        NutsChain chain(target, config, c);
        results[c] = chain.run();
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (int c = 0; c < n_chains; ++c)
    if (errors[c]) std::rethrow_exception(errors[c]);
  return results;
}

}  // namespace bpc

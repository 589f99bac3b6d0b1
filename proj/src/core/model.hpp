#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/data.hpp"

namespace bpc {

enum class BaseModel : int { BradleyTerry = 0, Davidson = 1 };

// Base model, extension set and prior variances.  Model strings follow the
// dash-joined convention: 'bt', 'davidson', extensions 'ordereffect',
// 'generalized', 'U' (random effects), 'S' (subject predictors), e.g.
// 'davidson-generalized-U'.
struct ModelSpec {
  BaseModel base = BaseModel::BradleyTerry;
  bool order_effect = false;
  bool generalized = false;
  bool random_effects = false;
  bool subject_predictors = false;

  // prior variances (normal, mean zero; u_var is the half-normal variance on U_std)
  double lambda_var = 3.0;
  double nu_var = 3.0;
  double gamma_var = 1.0;
  double beta_var = 3.0;
  double subject_var = 3.0;
  double u_var = 3.0;

  static ModelSpec parse(const std::string& model_string);
  std::string model_string() const;
  void validate() const;
};

enum class ParamBlock : int { Lambda = 0, Nu, Gamma, Beta, SubjectCoef, LogUStd, RawU };

// Flat-vector layout of the unconstrained parameter space.  Block order is
// lambda, nu, gamma, beta, S, U_std, raw U.  U_std is kept on the log scale in
// the unconstrained vector; raw U slots hold the standardized offsets (the
// non-centered parameterization U[i,s] = U_std * raw_u[i,s]).
struct ParameterLayout {
  struct Slot {
    std::string name;
    ParamBlock block;
    int a = -1;  // player index for Lambda/SubjectCoef/RawU, covariate index for Beta
    int b = -1;  // covariate index for SubjectCoef, subject index for RawU
  };

  std::vector<Slot> slots;
  int lambda_offset = -1, lambda_count = 0;
  int nu_offset = -1;
  int gamma_offset = -1;
  int beta_offset = -1, beta_count = 0;
  int subject_offset = -1, subject_count = 0;  // players x subject covariates
  int log_ustd_offset = -1;
  int rawu_offset = -1, rawu_count = 0;  // players x subjects

  std::size_t dimension() const { return slots.size(); }
  int index_of(const std::string& name) const;  // -1 when absent
  std::vector<std::string> names() const;

  // Maps an unconstrained draw to the reported scale (U_std exponentiated,
  // raw U multiplied up to U[i,s] = U_std * raw).
  std::vector<double> constrain(std::span<const double> theta) const;
};

ParameterLayout build_layout(const ModelSpec& spec, int num_players, int num_subjects,
                             const std::vector<std::string>& players,
                             const std::vector<std::string>& subjects,
                             const std::vector<std::string>& player_cov_names,
                             const std::vector<std::string>& subject_cov_names);

// ---- contest probability primitives ----

// P[i beats j] = exp(li) / (exp(li) + exp(lj + z*gamma)), evaluated in the
// log domain.  The complementary probability 1 - p pairs with p to an exact
// sum of 1.0.
double bt_win_probability(double lambda_i, double lambda_j, double gamma = 0.0, int z = 1);

struct TripleProb {
  double p_i = 0.0;
  double p_j = 0.0;
  double p_tie = 0.0;
};

// Davidson probabilities proportional to exp(li), exp(lj + z*gamma) and
// exp(nu + (li + lj + z*gamma)/2); the order adjustment enters the tie
// exponent through the adjusted lj.
TripleProb davidson_probabilities(double lambda_i, double lambda_j, double nu,
                                  double gamma = 0.0, int z = 1);

// ---- differentiable target interface ----

class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual std::size_t dimension() const = 0;
  // Returns the log density and fills grad (same length as x).  Non-finite
  // results are returned, not thrown; the sampler treats them as divergences.
  virtual double log_density_gradient(std::span<const double> x, std::span<double> grad) const = 0;
};

// Everything posterior products need once the contests themselves are gone:
// spec, registries, standardized player covariate matrix and the
// standardization constants for both covariate kinds.
struct FitModelInfo {
  ModelSpec spec;
  std::vector<std::string> players;
  std::vector<std::string> subjects;
  std::vector<std::string> player_cov_names;
  std::vector<double> player_cov_std;  // players x K, standardized
  std::vector<double> player_cov_mean, player_cov_sd;
  std::vector<std::string> subject_cov_names;
  std::vector<double> subject_cov_mean, subject_cov_sd;
  std::string data_fingerprint;
};

class CompiledModel : public LogDensity {
 public:
  CompiledModel(ContestDataset dataset, ModelSpec spec);

  std::size_t dimension() const override { return layout_.dimension(); }
  double log_density_gradient(std::span<const double> theta, std::span<double> grad) const override;

  // Checked variants used by the public surface; they reject non-finite results.
  double log_posterior(std::span<const double> theta) const;
  std::vector<double> grad_log_posterior(std::span<const double> theta) const;

  // Effective log abilities (player1 side first).  Order effect is not folded
  // in here; it belongs to the contest probability.  Covariates on the contest
  // are raw and get standardized with the stored constants.
  std::pair<double, double> compose_ability(std::span<const double> theta, const Contest& c) const;

  // Log probability of the observed outcome of dataset row `row` under theta.
  double contest_log_lik(std::span<const double> theta, std::size_t row) const;
  // Outcome probabilities of dataset row `row` (p_tie = 0 for Bradley-Terry).
  TripleProb contest_probabilities(std::span<const double> theta, std::size_t row) const;

  const ContestDataset& dataset() const { return data_; }
  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  FitModelInfo info() const;
  double standardized_row_covariate(std::size_t row, int k) const {
    return row_cov_std_[row * subject_cov_count_ + k];
  }

 private:
  double eval(std::span<const double> theta, double* grad) const;
  void side_ability(std::span<const double> theta, int player, int subject,
                    const double* row_cov, double& value) const;
  void side_gradient(std::span<const double> theta, int player, int subject,
                     const double* row_cov, double weight, double* grad) const;

  ContestDataset data_;
  ModelSpec spec_;
  ParameterLayout layout_;
  std::size_t subject_cov_count_ = 0;
  std::vector<double> row_cov_std_;  // contests x subject covariates, standardized
  std::vector<double> player_cov_std_;  // players x player covariates, standardized
  std::vector<double> player_cov_mean_, player_cov_sd_;
  std::vector<double> subject_cov_mean_, subject_cov_sd_;
};

CompiledModel build_model(const ContestDataset& dataset, const ModelSpec& spec);

// Per-player base abilities for one draw; generalized models compose the
// stored standardized X with the beta block.
std::vector<double> player_abilities(const FitModelInfo& info, const ParameterLayout& layout,
                                     std::span<const double> theta);

// Pairwise outcome probabilities for one draw at the "average subject"
// (random effects zero); subject_cov_std supplies standardized covariate
// values (empty means all zero).
TripleProb pair_probabilities(const FitModelInfo& info, const ParameterLayout& layout,
                              std::span<const double> theta, int player_i, int player_j,
                              int order_indicator = 1, std::span<const double> subject_cov_std = {});

}  // namespace bpc

#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bpc {

// ---- ModelSpec ----

ModelSpec ModelSpec::parse(const std::string& model_string) {
  ModelSpec spec;
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : model_string) {
    if (ch == '-') {
      tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  tokens.push_back(cur);

  if (tokens.empty() || (tokens[0] != "bt" && tokens[0] != "davidson"))
    fail(Status::UnknownModel, "model string must start with 'bt' or 'davidson', got '" +
                                   model_string + "'");
  spec.base = tokens[0] == "bt" ? BaseModel::BradleyTerry : BaseModel::Davidson;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const std::string& tok = tokens[t];
    bool dup = false;
    if (tok == "ordereffect") {
      dup = spec.order_effect;
      spec.order_effect = true;
    } else if (tok == "generalized") {
      dup = spec.generalized;
      spec.generalized = true;
    } else if (tok == "U") {
      dup = spec.random_effects;
      spec.random_effects = true;
    } else if (tok == "S") {
      dup = spec.subject_predictors;
      spec.subject_predictors = true;
    } else {
      fail(Status::UnknownModel,
           "unknown model token '" + tok +
               "'; valid tokens: bt, davidson, ordereffect, generalized, U, S");
    }
    if (dup) fail(Status::UnknownModel, "duplicate model token '" + tok + "'");
  }
  return spec;
}

std::string ModelSpec::model_string() const {
  std::string s = base == BaseModel::BradleyTerry ? "bt" : "davidson";
  if (order_effect) s += "-ordereffect";
  if (generalized) s += "-generalized";
  if (random_effects) s += "-U";
  if (subject_predictors) s += "-S";
  return s;
}

void ModelSpec::validate() const {
  for (double v : {lambda_var, nu_var, gamma_var, beta_var, subject_var, u_var})
    if (!(v > 0.0) || !std::isfinite(v))
      fail(Status::InvalidArgument, "prior variances must be positive and finite");
}

// ---- ParameterLayout ----

int ParameterLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(s.name);
  return out;
}

std::vector<double> ParameterLayout::constrain(std::span<const double> theta) const {
  std::vector<double> out(theta.begin(), theta.end());
  if (log_ustd_offset >= 0) {
    const double u_std = std::exp(theta[log_ustd_offset]);
    out[log_ustd_offset] = u_std;
    for (int r = 0; r < rawu_count; ++r) out[rawu_offset + r] = u_std * theta[rawu_offset + r];
  }
  return out;
}

ParameterLayout build_layout(const ModelSpec& spec, int num_players, int num_subjects,
                             const std::vector<std::string>& players,
                             const std::vector<std::string>& subjects,
                             const std::vector<std::string>& player_cov_names,
                             const std::vector<std::string>& subject_cov_names) {
  ParameterLayout lay;
  auto add = [&lay](std::string name, ParamBlock block, int a, int b) {
    lay.slots.push_back({std::move(name), block, a, b});
  };

  if (!spec.generalized) {
    lay.lambda_offset = static_cast<int>(lay.slots.size());
    lay.lambda_count = num_players;
    for (int i = 0; i < num_players; ++i) add("lambda[" + players[i] + "]", ParamBlock::Lambda, i, -1);
  }
  if (spec.base == BaseModel::Davidson) {
    lay.nu_offset = static_cast<int>(lay.slots.size());
    add("nu", ParamBlock::Nu, -1, -1);
  }
  if (spec.order_effect) {
    lay.gamma_offset = static_cast<int>(lay.slots.size());
    add("gamma", ParamBlock::Gamma, -1, -1);
  }
  if (spec.generalized) {
    lay.beta_offset = static_cast<int>(lay.slots.size());
    lay.beta_count = static_cast<int>(player_cov_names.size());
    for (int k = 0; k < lay.beta_count; ++k)
      add("beta[" + player_cov_names[k] + "]", ParamBlock::Beta, k, -1);
  }
  if (spec.subject_predictors) {
    lay.subject_offset = static_cast<int>(lay.slots.size());
    const int ks = static_cast<int>(subject_cov_names.size());
    lay.subject_count = num_players * ks;
    for (int i = 0; i < num_players; ++i)
      for (int k = 0; k < ks; ++k)
        add("S[" + players[i] + "," + subject_cov_names[k] + "]", ParamBlock::SubjectCoef, i, k);
  }
  if (spec.random_effects) {
    lay.log_ustd_offset = static_cast<int>(lay.slots.size());
    add("U_std", ParamBlock::LogUStd, -1, -1);
    lay.rawu_offset = static_cast<int>(lay.slots.size());
    lay.rawu_count = num_players * num_subjects;
    for (int i = 0; i < num_players; ++i)
      for (int s = 0; s < num_subjects; ++s)
        add("U[" + players[i] + "," + subjects[s] + "]", ParamBlock::RawU, i, s);
  }
  return lay;
}

// ---- probability primitives ----

double bt_win_probability(double lambda_i, double lambda_j, double gamma, int z) {
  return sigmoid(lambda_i - (lambda_j + z * gamma));
}

TripleProb davidson_probabilities(double lambda_i, double lambda_j, double nu, double gamma, int z) {
  const double e_i = lambda_i;
  const double e_j = lambda_j + z * gamma;
  const double e_t = nu + 0.5 * (e_i + e_j);
  const double lz = log_sum_exp3(e_i, e_j, e_t);
  return {std::exp(e_i - lz), std::exp(e_j - lz), std::exp(e_t - lz)};
}

// ---- model compilation ----

namespace {

struct Standardization {
  std::vector<double> values;  // standardized, same shape as input
  std::vector<double> mean, sd;
};

// Column-wise (mean 0, sd 1 with the n-1 denominator); constant columns are
// rejected because they carry no contrast and break the shared prior scale.
Standardization standardize_columns(const std::vector<double>& raw, std::size_t rows,
                                    std::size_t cols, const std::vector<std::string>& names) {
  Standardization out;
  out.values.assign(raw.size(), 0.0);
  out.mean.assign(cols, 0.0);
  out.sd.assign(cols, 1.0);
  for (std::size_t k = 0; k < cols; ++k) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double v = raw[r * cols + k];
      if (!std::isfinite(v))
        fail(Status::ParseError, "covariate '" + names[k] + "' contains a non-finite value");
      mean += v;
    }
    mean /= static_cast<double>(rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = raw[r * cols + k] - mean;
      ss += d * d;
    }
    if (rows < 2 || ss <= 0.0)
      fail(Status::ConstantCovariate, "covariate '" + names[k] + "' is constant");
    const double sd = std::sqrt(ss / static_cast<double>(rows - 1));
    out.mean[k] = mean;
    out.sd[k] = sd;
    for (std::size_t r = 0; r < rows; ++r) out.values[r * cols + k] = (raw[r * cols + k] - mean) / sd;
  }
  return out;
}

}  // namespace

CompiledModel::CompiledModel(ContestDataset dataset, ModelSpec spec)
    : data_(std::move(dataset)), spec_(spec) {
  spec_.validate();
  data_.validate();
  if (data_.num_players() < 2)
    fail(Status::SinglePlayer, "at least two players are required, got " +
                                   std::to_string(data_.num_players()));
  if (spec_.base == BaseModel::BradleyTerry && data_.has_ties())
    fail(Status::TieWithoutDavidson,
         std::to_string(data_.tie_count()) +
             " tie rows present: the Bradley-Terry base cannot model ties; use the davidson "
             "base or a tie-resolution strategy");
  if (spec_.generalized && data_.player_covariate_names.empty())
    fail(Status::MissingColumn, "generalized models require player covariates");
  if (spec_.subject_predictors && data_.covariate_names.empty())
    fail(Status::MissingColumn, "subject-predictor models require covariate columns");
  if (spec_.random_effects || spec_.subject_predictors) {
    if (data_.num_subjects() == 0)
      fail(Status::MissingColumn, "random effects and subject predictors require a subject column");
    for (std::size_t i = 0; i < data_.contests.size(); ++i)
      if (data_.contests[i].subject < 0)
        fail(Status::UnknownSubject, "contest " + std::to_string(i) + " has no subject id");
  }

  if (spec_.generalized) {
    auto st = standardize_columns(data_.player_covariates, data_.players.size(),
                                  data_.player_covariate_names.size(), data_.player_covariate_names);
    player_cov_std_ = std::move(st.values);
    player_cov_mean_ = std::move(st.mean);
    player_cov_sd_ = std::move(st.sd);
  }
  if (spec_.subject_predictors) {
    subject_cov_count_ = data_.covariate_names.size();
    std::vector<double> raw(data_.contests.size() * subject_cov_count_);
    for (std::size_t r = 0; r < data_.contests.size(); ++r)
      for (std::size_t k = 0; k < subject_cov_count_; ++k)
        raw[r * subject_cov_count_ + k] = data_.contests[r].covariates[k];
    auto st = standardize_columns(raw, data_.contests.size(), subject_cov_count_,
                                  data_.covariate_names);
    row_cov_std_ = std::move(st.values);
    subject_cov_mean_ = std::move(st.mean);
    subject_cov_sd_ = std::move(st.sd);
  }

  layout_ = build_layout(spec_, data_.num_players(), data_.num_subjects(), data_.players,
                         data_.subjects, data_.player_covariate_names, data_.covariate_names);
  if (layout_.dimension() == 0) fail(Status::InvalidArgument, "model has no parameters");
}

CompiledModel build_model(const ContestDataset& dataset, const ModelSpec& spec) {
  return CompiledModel(dataset, spec);
}

void CompiledModel::side_ability(std::span<const double> theta, int player, int subject,
                                 const double* row_cov, double& value) const {
  double v;
  if (spec_.generalized) {
    v = 0.0;
    const std::size_t kp = data_.player_covariate_names.size();
    for (std::size_t k = 0; k < kp; ++k)
      v += player_cov_std_[player * kp + k] * theta[layout_.beta_offset + k];
  } else {
    v = theta[layout_.lambda_offset + player];
  }
  if (spec_.random_effects) {
    const double u_std = std::exp(theta[layout_.log_ustd_offset]);
    v += u_std * theta[layout_.rawu_offset + player * data_.num_subjects() + subject];
  }
  if (spec_.subject_predictors) {
    for (std::size_t k = 0; k < subject_cov_count_; ++k)
      v += row_cov[k] * theta[layout_.subject_offset + player * subject_cov_count_ + k];
  }
  value = v;
}

void CompiledModel::side_gradient(std::span<const double> theta, int player, int subject,
                                  const double* row_cov, double weight, double* grad) const {
  if (spec_.generalized) {
    const std::size_t kp = data_.player_covariate_names.size();
    for (std::size_t k = 0; k < kp; ++k)
      grad[layout_.beta_offset + k] += weight * player_cov_std_[player * kp + k];
  } else {
    grad[layout_.lambda_offset + player] += weight;
  }
  if (spec_.random_effects) {
    const double u_std = std::exp(theta[layout_.log_ustd_offset]);
    const std::size_t slot = layout_.rawu_offset + player * data_.num_subjects() + subject;
    grad[slot] += weight * u_std;
    grad[layout_.log_ustd_offset] += weight * u_std * theta[slot];
  }
  if (spec_.subject_predictors) {
    for (std::size_t k = 0; k < subject_cov_count_; ++k)
      grad[layout_.subject_offset + player * subject_cov_count_ + k] += weight * row_cov[k];
  }
}

double CompiledModel::eval(std::span<const double> theta, double* grad) const {
  const std::size_t dim = layout_.dimension();
  if (theta.size() != dim)
    fail(Status::InvalidArgument, "parameter vector has dimension " + std::to_string(theta.size()) +
                                      ", layout needs " + std::to_string(dim));
  if (grad) std::fill(grad, grad + dim, 0.0);

  double lp = 0.0;
  const bool davidson = spec_.base == BaseModel::Davidson;
  const double gamma = spec_.order_effect ? theta[layout_.gamma_offset] : 0.0;
  const double nu = davidson ? theta[layout_.nu_offset] : 0.0;

  for (std::size_t row = 0; row < data_.contests.size(); ++row) {
    const Contest& c = data_.contests[row];
    const double* rc = subject_cov_count_ ? &row_cov_std_[row * subject_cov_count_] : nullptr;
    double lam1, lam0;
    side_ability(theta, c.player1, c.subject, rc, lam1);
    side_ability(theta, c.player0, c.subject, rc, lam0);
    const int z = spec_.order_effect ? c.order_indicator : 0;

    if (!davidson) {
      // player1 is i, player0 is j; d is the logit of j's side
      const double d = (lam0 + z * gamma) - lam1;
      double dll_dd;
      if (c.outcome == OutcomeKind::Player1Wins) {
        lp += -softplus(d);
        dll_dd = -sigmoid(d);
      } else {
        lp += d - softplus(d);
        dll_dd = 1.0 - sigmoid(d);
      }
      if (grad) {
        side_gradient(theta, c.player1, c.subject, rc, -dll_dd, grad);
        side_gradient(theta, c.player0, c.subject, rc, dll_dd, grad);
        if (spec_.order_effect) grad[layout_.gamma_offset] += dll_dd * z;
      }
    } else {
      const double e1 = lam1;
      const double e0 = lam0 + z * gamma;
      const double et = nu + 0.5 * (e1 + e0);
      const double lz = log_sum_exp3(e1, e0, et);
      const double y1 = c.outcome == OutcomeKind::Player1Wins ? 1.0 : 0.0;
      const double y0 = c.outcome == OutcomeKind::Player0Wins ? 1.0 : 0.0;
      const double yt = c.outcome == OutcomeKind::Tie ? 1.0 : 0.0;
      lp += (y1 * e1 + y0 * e0 + yt * et) - lz;
      if (grad) {
        const double p1 = std::exp(e1 - lz);
        const double p0 = std::exp(e0 - lz);
        const double pt = std::exp(et - lz);
        const double dt = yt - pt;
        const double de1 = (y1 - p1) + 0.5 * dt;
        const double de0 = (y0 - p0) + 0.5 * dt;
        side_gradient(theta, c.player1, c.subject, rc, de1, grad);
        side_gradient(theta, c.player0, c.subject, rc, de0, grad);
        grad[layout_.nu_offset] += dt;
        if (spec_.order_effect) grad[layout_.gamma_offset] += de0 * z;
      }
    }
  }

  // priors
  for (int i = 0; i < layout_.lambda_count; ++i) {
    const double v = theta[layout_.lambda_offset + i];
    lp += log_normal_pdf(v, spec_.lambda_var);
    if (grad) grad[layout_.lambda_offset + i] -= v / spec_.lambda_var;
  }
  if (davidson) {
    lp += log_normal_pdf(nu, spec_.nu_var);
    if (grad) grad[layout_.nu_offset] -= nu / spec_.nu_var;
  }
  if (spec_.order_effect) {
    lp += log_normal_pdf(gamma, spec_.gamma_var);
    if (grad) grad[layout_.gamma_offset] -= gamma / spec_.gamma_var;
  }
  for (int k = 0; k < layout_.beta_count; ++k) {
    const double v = theta[layout_.beta_offset + k];
    lp += log_normal_pdf(v, spec_.beta_var);
    if (grad) grad[layout_.beta_offset + k] -= v / spec_.beta_var;
  }
  for (int k = 0; k < layout_.subject_count; ++k) {
    const double v = theta[layout_.subject_offset + k];
    lp += log_normal_pdf(v, spec_.subject_var);
    if (grad) grad[layout_.subject_offset + k] -= v / spec_.subject_var;
  }
  if (spec_.random_effects) {
    for (int r = 0; r < layout_.rawu_count; ++r) {
      const double v = theta[layout_.rawu_offset + r];
      lp += log_normal_pdf(v, 1.0);
      if (grad) grad[layout_.rawu_offset + r] -= v;
    }
    // half-normal prior on U_std = exp(t), with the log-scale Jacobian
    const double t = theta[layout_.log_ustd_offset];
    const double u_std = std::exp(t);
    lp += std::log(2.0) + log_normal_pdf(u_std, spec_.u_var) + t;
    if (grad) grad[layout_.log_ustd_offset] += 1.0 - u_std * u_std / spec_.u_var;
  }
  return lp;
}

double CompiledModel::log_density_gradient(std::span<const double> theta,
                                           std::span<double> grad) const {
  return eval(theta, grad.data());
}

double CompiledModel::log_posterior(std::span<const double> theta) const {
  const double lp = eval(theta, nullptr);
  if (!std::isfinite(lp))
    fail(Status::NonFiniteDensity, "log posterior is not finite at the supplied point");
  return lp;
}

std::vector<double> CompiledModel::grad_log_posterior(std::span<const double> theta) const {
  std::vector<double> grad(layout_.dimension());
  eval(theta, grad.data());
  for (double g : grad)
    if (!std::isfinite(g))
      fail(Status::NonFiniteGradient, "gradient is not finite at the supplied point");
  return grad;
}

std::pair<double, double> CompiledModel::compose_ability(std::span<const double> theta,
                                                         const Contest& c) const {
  if (theta.size() != layout_.dimension())
    fail(Status::InvalidArgument, "parameter vector dimension mismatch");
  if ((spec_.random_effects || spec_.subject_predictors) &&
      (c.subject < 0 || c.subject >= data_.num_subjects()))
    fail(Status::UnknownSubject, "contest carries no valid subject id but the model needs one");
  std::vector<double> cov_std;
  const double* rc = nullptr;
  if (spec_.subject_predictors) {
    if (c.covariates.size() != subject_cov_count_)
      fail(Status::MissingCovariate, "contest carries " + std::to_string(c.covariates.size()) +
                                         " covariates, model needs " +
                                         std::to_string(subject_cov_count_));
    cov_std.resize(subject_cov_count_);
    for (std::size_t k = 0; k < subject_cov_count_; ++k)
      cov_std[k] = (c.covariates[k] - subject_cov_mean_[k]) / subject_cov_sd_[k];
    rc = cov_std.data();
  }
  double lam1, lam0;
  side_ability(theta, c.player1, c.subject, rc, lam1);
  side_ability(theta, c.player0, c.subject, rc, lam0);
  return {lam1, lam0};
}

double CompiledModel::contest_log_lik(std::span<const double> theta, std::size_t row) const {
  const Contest& c = data_.contests[row];
  const double* rc = subject_cov_count_ ? &row_cov_std_[row * subject_cov_count_] : nullptr;
  double lam1, lam0;
  side_ability(theta, c.player1, c.subject, rc, lam1);
  side_ability(theta, c.player0, c.subject, rc, lam0);
  const double gamma = spec_.order_effect ? theta[layout_.gamma_offset] : 0.0;
  const int z = spec_.order_effect ? c.order_indicator : 0;
  if (spec_.base == BaseModel::BradleyTerry) {
    const double d = (lam0 + z * gamma) - lam1;
    return c.outcome == OutcomeKind::Player1Wins ? -softplus(d) : d - softplus(d);
  }
  const double nu = theta[layout_.nu_offset];
  const double e1 = lam1;
  const double e0 = lam0 + z * gamma;
  const double et = nu + 0.5 * (e1 + e0);
  const double lz = log_sum_exp3(e1, e0, et);
  switch (c.outcome) {
    case OutcomeKind::Player1Wins: return e1 - lz;
    case OutcomeKind::Player0Wins: return e0 - lz;
    case OutcomeKind::Tie: return et - lz;
  }
  return 0.0;
}

TripleProb CompiledModel::contest_probabilities(std::span<const double> theta,
                                                std::size_t row) const {
  const Contest& c = data_.contests[row];
  const double* rc = subject_cov_count_ ? &row_cov_std_[row * subject_cov_count_] : nullptr;
  double lam1, lam0;
  side_ability(theta, c.player1, c.subject, rc, lam1);
  side_ability(theta, c.player0, c.subject, rc, lam0);
  const double gamma = spec_.order_effect ? theta[layout_.gamma_offset] : 0.0;
  const int z = spec_.order_effect ? c.order_indicator : 0;
  if (spec_.base == BaseModel::BradleyTerry) {
    const double p1 = bt_win_probability(lam1, lam0, gamma, z);
    return {p1, 1.0 - p1, 0.0};
  }
  return davidson_probabilities(lam1, lam0, theta[layout_.nu_offset], gamma, z);
}

FitModelInfo CompiledModel::info() const {
  FitModelInfo fi;
  fi.spec = spec_;
  fi.players = data_.players;
  fi.subjects = data_.subjects;
  fi.player_cov_names = data_.player_covariate_names;
  fi.player_cov_std = player_cov_std_;
  fi.player_cov_mean = player_cov_mean_;
  fi.player_cov_sd = player_cov_sd_;
  fi.subject_cov_names = data_.covariate_names;
  fi.subject_cov_mean = subject_cov_mean_;
  fi.subject_cov_sd = subject_cov_sd_;
  fi.data_fingerprint = data_.fingerprint;
  return fi;
}

std::vector<double> player_abilities(const FitModelInfo& info, const ParameterLayout& layout,
                                     std::span<const double> theta) {
  const int np = static_cast<int>(info.players.size());
  std::vector<double> out(np, 0.0);
  if (info.spec.generalized) {
    const std::size_t kp = info.player_cov_names.size();
    for (int i = 0; i < np; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < kp; ++k)
        v += info.player_cov_std[i * kp + k] * theta[layout.beta_offset + k];
      out[i] = v;
    }
  } else {
    for (int i = 0; i < np; ++i) out[i] = theta[layout.lambda_offset + i];
  }
  return out;
}

TripleProb pair_probabilities(const FitModelInfo& info, const ParameterLayout& layout,
                              std::span<const double> theta, int player_i, int player_j,
                              int order_indicator, std::span<const double> subject_cov_std) {
  auto side = [&](int p) {
    double v;
    if (info.spec.generalized) {
      v = 0.0;
      const std::size_t kp = info.player_cov_names.size();
      for (std::size_t k = 0; k < kp; ++k)
        v += info.player_cov_std[p * kp + k] * theta[layout.beta_offset + k];
    } else {
      v = theta[layout.lambda_offset + p];
    }
    if (info.spec.subject_predictors && !subject_cov_std.empty()) {
      const std::size_t ks = info.subject_cov_names.size();
      for (std::size_t k = 0; k < ks; ++k)
        v += subject_cov_std[k] * theta[layout.subject_offset + p * ks + k];
    }
    return v;  // random effects at the average subject: U = 0
  };
  const double li = side(player_i);
  const double lj = side(player_j);
  const double gamma = info.spec.order_effect ? theta[layout.gamma_offset] : 0.0;
  const int z = info.spec.order_effect ? order_indicator : 0;
  if (info.spec.base == BaseModel::BradleyTerry) {
    const double p = bt_win_probability(li, lj, gamma, z);
    return {p, 1.0 - p, 0.0};
  }
  return davidson_probabilities(li, lj, theta[layout.nu_offset], gamma, z);
}

}  // namespace bpc

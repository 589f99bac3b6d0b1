#include "bpc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "core/archive.hpp"
#include "core/comparison.hpp"
#include "core/csv.hpp"
#include "core/diagnostics.hpp"
#include "core/fit.hpp"
#include "core/render.hpp"

struct bpc_dataset {
  bpc::ContestDataset ds;
  bpc::IngestSpec ingest;
};

struct bpc_model {
  bpc::CompiledModel model;
  bpc::IngestSpec ingest;
};

struct bpc_fit {
  bpc::PosteriorFit fit;
};

namespace {

thread_local std::string t_last_error;

// the C enum mirrors bpc::Status one to one
static_assert(static_cast<int>(bpc::Status::Ok) == BPC_OK);
static_assert(static_cast<int>(bpc::Status::UnknownModel) == BPC_ERR_UNKNOWN_MODEL);
static_assert(static_cast<int>(bpc::Status::MissingCovariate) == BPC_ERR_MISSING_COVARIATE);
static_assert(static_cast<int>(bpc::Status::AllDivergent) == BPC_ERR_ALL_DIVERGENT);
static_assert(static_cast<int>(bpc::Status::DataFingerprintMismatch) ==
              BPC_ERR_FINGERPRINT_MISMATCH);
static_assert(static_cast<int>(bpc::Status::Internal) == BPC_ERR_INTERNAL);

bpc_status set_error(bpc::Status code, const std::string& what) {
  t_last_error = what;
  return static_cast<bpc_status>(static_cast<int>(code));
}

template <typename Fn>
bpc_status guarded(Fn&& fn) {
  try {
    fn();
    return BPC_OK;
  } catch (const bpc::Error& e) {
    return set_error(e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(bpc::Status::Internal, "out of memory");
  } catch (const std::exception& e) {
    return set_error(bpc::Status::Internal, e.what());
  } catch (...) {
    return set_error(bpc::Status::Internal, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split_csv_list(const char* s) {
  std::vector<std::string> out;
  if (!s || !*s) return out;
  std::string cur;
  for (const char* p = s; *p; ++p) {
    if (*p == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(*p);
    }
  }
  out.push_back(cur);
  return out;
}

bpc::IngestSpec to_ingest_spec(const char* path, const bpc_ingest_options* o) {
  if (!o) bpc::fail(bpc::Status::InvalidArgument, "ingest options are required");
  bpc::IngestSpec spec;
  spec.path = path ? path : "";
  spec.player0_col = o->player0_col ? o->player0_col : "";
  spec.player1_col = o->player1_col ? o->player1_col : "";
  spec.result_col = o->result_col ? o->result_col : "";
  spec.score0_col = o->score0_col ? o->score0_col : "";
  spec.score1_col = o->score1_col ? o->score1_col : "";
  spec.subject_col = o->subject_col ? o->subject_col : "";
  spec.order_col = o->order_col ? o->order_col : "";
  spec.covariate_cols = split_csv_list(o->covariate_cols);
  spec.player_cov_path = o->player_cov_path ? o->player_cov_path : "";
  spec.player_cov_cols = split_csv_list(o->player_cov_cols);
  switch (o->solve_ties) {
    case BPC_TIES_NONE: spec.solve_ties = bpc::TieStrategy::None; break;
    case BPC_TIES_RANDOM: spec.solve_ties = bpc::TieStrategy::Random; break;
    case BPC_TIES_REMOVE: spec.solve_ties = bpc::TieStrategy::Remove; break;
    default: bpc::fail(bpc::Status::InvalidArgument, "invalid solve_ties value");
  }
  spec.tie_seed = o->tie_seed;
  spec.delimiter = o->delimiter ? o->delimiter : ',';
  if (spec.player0_col.empty() || spec.player1_col.empty())
    bpc::fail(bpc::Status::InvalidArgument, "player0 and player1 columns are required");
  return spec;
}

bpc::TableOptions to_table_options(const bpc_table_options* o) {
  bpc::TableOptions t;
  if (!o) return t;
  switch (o->format) {
    case BPC_FORMAT_TEXT: t.format = bpc::OutputFormat::Text; break;
    case BPC_FORMAT_CSV: t.format = bpc::OutputFormat::Csv; break;
    case BPC_FORMAT_JSON: t.format = bpc::OutputFormat::Json; break;
    default: bpc::fail(bpc::Status::InvalidArgument, "invalid format value");
  }
  switch (o->interval_kind) {
    case BPC_INTERVAL_HPD: t.interval = bpc::IntervalKind::Hpd; break;
    case BPC_INTERVAL_EQUAL_TAILED: t.interval = bpc::IntervalKind::EqualTailed; break;
    default: bpc::fail(bpc::Status::InvalidArgument, "invalid interval kind");
  }
  if (o->mass > 0) {
    if (o->mass >= 1.0) bpc::fail(bpc::Status::InvalidArgument, "interval mass must lie in (0,1)");
    t.mass = o->mass;
  }
  if (o->digits > 0) t.digits = o->digits;
  return t;
}

bpc::OutputFormat to_format(int format) {
  switch (format) {
    case BPC_FORMAT_TEXT: return bpc::OutputFormat::Text;
    case BPC_FORMAT_CSV: return bpc::OutputFormat::Csv;
    case BPC_FORMAT_JSON: return bpc::OutputFormat::Json;
    default: bpc::fail(bpc::Status::InvalidArgument, "invalid format value");
  }
}

void require(const void* p, const char* what) {
  if (!p) bpc::fail(bpc::Status::InvalidArgument, std::string(what) + " handle is null");
}

// scoring a fit against a dataset: fingerprints must agree and the rebuilt
// model must reproduce the fitted layout
bpc::PointwiseLogLik score_against(const bpc_fit* fit, const bpc_dataset* ds) {
  if (ds->ds.fingerprint != fit->fit.info.data_fingerprint)
    bpc::fail(bpc::Status::DataFingerprintMismatch,
              "dataset fingerprint " + ds->ds.fingerprint + " does not match the fit's " +
                  fit->fit.info.data_fingerprint);
  bpc::CompiledModel model = bpc::build_model(ds->ds, fit->fit.info.spec);
  if (model.layout().dimension() != fit->fit.dimension())
    bpc::fail(bpc::Status::InvalidArgument,
              "dataset does not reproduce the fitted parameter layout");
  return bpc::pointwise_loglik(model, fit->fit);
}

}  // namespace

extern "C" {

int bpc_status_exit_class(bpc_status status) {
  return bpc::status_exit_class(static_cast<bpc::Status>(static_cast<int>(status)));
}

const char* bpc_status_name(bpc_status status) {
  return bpc::status_name(static_cast<bpc::Status>(static_cast<int>(status)));
}

const char* bpc_last_error(void) { return t_last_error.c_str(); }

void bpc_string_free(char* s) { delete[] s; }

void bpc_dataset_free(bpc_dataset* ds) { delete ds; }
void bpc_model_free(bpc_model* model) { delete model; }
void bpc_fit_free(bpc_fit* fit) { delete fit; }

bpc_status bpc_dataset_load(const char* path, const bpc_ingest_options* options,
                            bpc_dataset** out) {
  return guarded([&] {
    require(out, "output");
    if (!path || !*path) bpc::fail(bpc::Status::InvalidArgument, "data path is required");
    bpc::IngestSpec spec = to_ingest_spec(path, options);
    auto* handle = new bpc_dataset{bpc::load_dataset(spec), std::move(spec)};
    *out = handle;
  });
}

size_t bpc_dataset_num_contests(const bpc_dataset* ds) { return ds ? ds->ds.num_contests() : 0; }
size_t bpc_dataset_num_players(const bpc_dataset* ds) {
  return ds ? static_cast<size_t>(ds->ds.num_players()) : 0;
}

bpc_status bpc_model_build(const bpc_dataset* ds, const char* model_string,
                           const bpc_prior_options* priors, bpc_model** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "output");
    if (!model_string) bpc::fail(bpc::Status::InvalidArgument, "model string is required");
    bpc::ModelSpec spec = bpc::ModelSpec::parse(model_string);
    if (priors) {
      if (priors->lambda_sd > 0) spec.lambda_var = priors->lambda_sd * priors->lambda_sd;
      if (priors->nu_sd > 0) spec.nu_var = priors->nu_sd * priors->nu_sd;
      if (priors->gamma_sd > 0) spec.gamma_var = priors->gamma_sd * priors->gamma_sd;
      if (priors->beta_sd > 0) spec.beta_var = priors->beta_sd * priors->beta_sd;
      if (priors->subject_sd > 0) spec.subject_var = priors->subject_sd * priors->subject_sd;
      if (priors->u_sd > 0) spec.u_var = priors->u_sd * priors->u_sd;
    }
    *out = new bpc_model{bpc::build_model(ds->ds, spec), ds->ingest};
  });
}

bpc_status bpc_sample(const bpc_model* model, const bpc_sampler_options* options, bpc_fit** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "output");
    bpc::SamplerConfig cfg;
    if (options) {
      if (options->chains > 0) cfg.chains = options->chains;
      if (options->warmup >= 0) cfg.warmup = options->warmup;
      if (options->draws > 0) cfg.draws = options->draws;
      if (options->target_accept > 0) cfg.target_accept = options->target_accept;
      if (options->max_treedepth > 0) cfg.max_treedepth = options->max_treedepth;
      cfg.seed = options->seed;
      if (options->init_radius >= 0) cfg.init_radius = options->init_radius;
      if (options->threads > 0) cfg.threads = options->threads;
    }
    auto* handle = new bpc_fit{bpc::sample(model->model, cfg)};
    handle->fit.ingest = model->ingest;
    *out = handle;
  });
}

bpc_status bpc_fit_save(const bpc_fit* fit, const char* path) {
  return guarded([&] {
    require(fit, "fit");
    if (!path || !*path) bpc::fail(bpc::Status::InvalidArgument, "archive path is required");
    bpc::save_fit(fit->fit, path);
  });
}

bpc_status bpc_fit_load(const char* path, bpc_fit** out) {
  return guarded([&] {
    require(out, "output");
    if (!path || !*path) bpc::fail(bpc::Status::InvalidArgument, "archive path is required");
    *out = new bpc_fit{bpc::load_fit(path)};
  });
}

bpc_status bpc_fit_load_dataset(const bpc_fit* fit, const char* data_path, bpc_dataset** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    if (!data_path || !*data_path)
      bpc::fail(bpc::Status::InvalidArgument, "data path is required");
    bpc::ContestDataset ds = bpc::load_fit_dataset(fit->fit, data_path);
    bpc::IngestSpec spec = fit->fit.ingest;
    spec.path = data_path;
    *out = new bpc_dataset{std::move(ds), std::move(spec)};
  });
}

size_t bpc_fit_num_chains(const bpc_fit* fit) { return fit ? fit->fit.num_chains() : 0; }
size_t bpc_fit_draws_per_chain(const bpc_fit* fit) { return fit ? fit->fit.draws_per_chain() : 0; }
size_t bpc_fit_dimension(const bpc_fit* fit) { return fit ? fit->fit.dimension() : 0; }

bpc_status bpc_render_summary(const bpc_fit* fit, const bpc_table_options* options, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    *out = dup_string(bpc::render_summary(fit->fit, to_table_options(options)));
  });
}

bpc_status bpc_render_parameters(const bpc_fit* fit, const bpc_table_options* options,
                                 char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    const bpc::TableOptions opts = to_table_options(options);
    *out = dup_string(bpc::render_parameters(bpc::summarize(fit->fit, opts.interval, opts.mass),
                                             opts));
  });
}

bpc_status bpc_render_ranks(const bpc_fit* fit, const bpc_table_options* options, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    const bpc::TableOptions opts = to_table_options(options);
    *out = dup_string(bpc::render_ranks(bpc::rank_distribution(fit->fit), opts));
  });
}

bpc_status bpc_render_probabilities(const bpc_fit* fit, const bpc_table_options* options,
                                    char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    const bpc::TableOptions opts = to_table_options(options);
    *out = dup_string(bpc::render_probabilities(bpc::probability_table(fit->fit), opts));
  });
}

bpc_status bpc_render_diagnostics(const bpc_fit* fit, int format, char** out, int* pass) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    const bpc::ConvergenceReport report = bpc::convergence_report(fit->fit);
    if (pass) *pass = report.pass() ? 1 : 0;
    *out = dup_string(bpc::render_diagnostics(report, to_format(format)));
  });
}

bpc_status bpc_render_waic(const bpc_fit* fit, const bpc_dataset* ds, int format, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(ds, "dataset");
    require(out, "output");
    *out = dup_string(bpc::render_ic(bpc::waic(score_against(fit, ds)), false, to_format(format)));
  });
}

bpc_status bpc_render_loo(const bpc_fit* fit, const bpc_dataset* ds, int format, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(ds, "dataset");
    require(out, "output");
    *out = dup_string(bpc::render_ic(bpc::psis_loo(score_against(fit, ds)), true,
                                     to_format(format)));
  });
}

bpc_status bpc_render_compare(const bpc_fit* const* fits, const bpc_dataset* const* datasets,
                              const char* const* names, size_t count, int use_loo, int format,
                              char** out) {
  return guarded([&] {
    require(out, "output");
    if (!fits || !datasets || !names || count < 2)
      bpc::fail(bpc::Status::InvalidArgument, "compare needs at least two fits");
    std::vector<bpc::IcEstimate> estimates;
    std::vector<std::string> labels;
    for (size_t i = 0; i < count; ++i) {
      require(fits[i], "fit");
      require(datasets[i], "dataset");
      const bpc::PointwiseLogLik ll = score_against(fits[i], datasets[i]);
      estimates.push_back(use_loo ? bpc::psis_loo(ll) : bpc::waic(ll));
      labels.push_back(names[i] ? names[i] : fits[i]->fit.info.spec.model_string());
    }
    *out = dup_string(bpc::render_compare(bpc::compare_models(estimates, labels), use_loo != 0,
                                          to_format(format)));
  });
}

bpc_status bpc_render_predict(const bpc_fit* fit, const char* newdata_path, size_t draws_per_row,
                              uint64_t seed, int standardized, int format, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    if (!newdata_path || !*newdata_path)
      bpc::fail(bpc::Status::InvalidArgument, "prediction data path is required");

    const bpc::PosteriorFit& pf = fit->fit;
    const std::string p0_col =
        pf.ingest.player0_col.empty() ? "player0" : pf.ingest.player0_col;
    const std::string p1_col =
        pf.ingest.player1_col.empty() ? "player1" : pf.ingest.player1_col;
    const char delim = pf.ingest.delimiter ? pf.ingest.delimiter : ',';
    const bpc::CsvTable table = bpc::read_csv(newdata_path, delim);
    const int c0 = table.require_column(p0_col, "player0");
    const int c1 = table.require_column(p1_col, "player1");
    const int corder =
        pf.ingest.order_col.empty() ? -1 : table.column(pf.ingest.order_col);
    std::vector<int> ccov;
    if (pf.info.spec.subject_predictors) {
      const auto& cols = pf.ingest.covariate_cols.empty() ? pf.info.subject_cov_names
                                                          : pf.ingest.covariate_cols;
      for (const auto& name : cols) {
        const int c = table.column(name);
        if (c < 0)
          bpc::fail(bpc::Status::MissingCovariate,
                    std::string(newdata_path) + ": covariate column '" + name + "' not found");
        ccov.push_back(c);
      }
    }

    std::vector<bpc::PredictRequest> requests;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      bpc::PredictRequest req;
      req.player0 = table.rows[r][c0];
      req.player1 = table.rows[r][c1];
      if (corder >= 0) {
        const std::string& v = table.rows[r][corder];
        req.order_indicator = v == "0" ? 0 : 1;
      }
      for (int c : ccov) {
        char* end = nullptr;
        const std::string& field = table.rows[r][c];
        const double value = std::strtod(field.c_str(), &end);
        if (field.empty() || end != field.c_str() + field.size())
          bpc::fail(bpc::Status::ParseError, std::string(newdata_path) + ": bad covariate '" +
                                                 field + "' on line " + std::to_string(r + 2));
        req.covariates.push_back(value);
      }
      requests.push_back(std::move(req));
    }

    const auto rows = bpc::predict(pf, requests, draws_per_row, seed, standardized != 0);
    bpc::TableOptions opts;
    opts.format = to_format(format);
    *out = dup_string(
        bpc::render_predict(rows, pf.info.spec.base == bpc::BaseModel::Davidson, opts));
  });
}

bpc_status bpc_render_plotdata(const bpc_fit* fit, const char* params, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "output");
    *out = dup_string(bpc::render_plotdata(fit->fit, split_csv_list(params)));
  });
}

}  // extern "C"

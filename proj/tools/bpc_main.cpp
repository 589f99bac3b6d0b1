// bpc - command line front end for the Bayesian paired-comparison library.
// Every subcommand goes through the C API in bpc.h; exit codes are
// 0 ok, 1 usage, 2 data error, 3 sampler failure, 4 archive error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpc.h"

namespace {

struct StringOut {
  char* value = nullptr;
  ~StringOut() { bpc_string_free(value); }
};

int fail_with(bpc_status status) {
  std::cerr << "error [" << bpc_status_name(status) << "]: " << bpc_last_error() << "\n";
  return bpc_status_exit_class(status);
}

struct FitHandle {
  bpc_fit* fit = nullptr;
  ~FitHandle() { bpc_fit_free(fit); }
};

struct DatasetHandle {
  bpc_dataset* ds = nullptr;
  ~DatasetHandle() { bpc_dataset_free(ds); }
};

int parse_format_flag(const std::string& s) {
  if (s == "text") return BPC_FORMAT_TEXT;
  if (s == "csv") return BPC_FORMAT_CSV;
  return BPC_FORMAT_JSON;
}

struct TableFlags {
  std::string format = "text";
  std::string interval = "hpd";
  double mass = 0.95;
  int digits = 2;

  void attach(CLI::App* cmd, bool with_interval) {
    cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--digits", digits, "decimals in text tables")->check(CLI::Range(1, 12));
    if (with_interval) {
      cmd->add_option("--interval", interval, "interval kind")
          ->check(CLI::IsMember({"hpd", "eqtailed"}));
      cmd->add_option("--mass", mass, "interval probability mass")
          ->check(CLI::Range(1e-6, 0.999999));
    }
  }
  bpc_table_options options() const {
    bpc_table_options o{};
    o.format = parse_format_flag(format);
    o.interval_kind = interval == "hpd" ? BPC_INTERVAL_HPD : BPC_INTERVAL_EQUAL_TAILED;
    o.mass = mass;
    o.digits = digits;
    return o;
  }
};

int load_fit_or_fail(const std::string& path, FitHandle& handle) {
  const bpc_status st = bpc_fit_load(path.c_str(), &handle.fit);
  if (st != BPC_OK) return fail_with(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Bradley-Terry and Davidson paired-comparison models"};
  app.require_subcommand(1);

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand("fit", "ingest a dataset and sample the posterior");
  std::string data_path, player0 = "player0", player1 = "player1", result = "result", score0,
                         score1;
  std::string subject, order, covariates, player_data, player_covs, solve_ties = "none";
  std::string model = "bt", out_path, delimiter = ",";
  std::uint64_t tie_seed = 0, seed = 0;
  int chains = 0, warmup = -1, draws = 0, max_treedepth = 0, threads = 0;
  double target_accept = 0, init_radius = -1;
  double prior_lambda_sd = 0, prior_nu_sd = 0, prior_gamma_sd = 0, prior_beta_sd = 0,
         prior_s_sd = 0, prior_u_sd = 0;

  fit_cmd->add_option("--data", data_path, "contest CSV file")->required();
  fit_cmd->add_option("--player0", player0, "player0 column name");
  fit_cmd->add_option("--player1", player1, "player1 column name");
  auto* result_opt = fit_cmd->add_option(
      "--result", result, "result column (0 player0 wins, 1 player1 wins, 2 tie)");
  fit_cmd->add_option("--score0", score0, "player0 score column (alternative to --result)");
  fit_cmd->add_option("--score1", score1, "player1 score column");
  fit_cmd->add_option("--subject", subject, "subject id column");
  fit_cmd->add_option("--order", order, "order-effect indicator column (0/1)");
  fit_cmd->add_option("--covariates", covariates, "comma-separated subject covariate columns");
  fit_cmd->add_option("--player-data", player_data, "per-player covariate CSV (player,cov...)");
  fit_cmd->add_option("--player-covariates", player_covs,
                      "comma-separated player covariate columns of --player-data");
  fit_cmd->add_option("--solve-ties", solve_ties, "tie handling before fitting")
      ->check(CLI::IsMember({"none", "random", "remove"}));
  fit_cmd->add_option("--tie-seed", tie_seed, "seed for random tie resolution");
  fit_cmd->add_option("--delimiter", delimiter, "field delimiter");
  fit_cmd->add_option("--model", model,
                      "model string: bt|davidson with -ordereffect -generalized -U -S");
  fit_cmd->add_option("--chains", chains, "number of chains (default 4)");
  fit_cmd->add_option("--warmup", warmup, "warmup iterations per chain (default 1000)");
  fit_cmd->add_option("--draws", draws, "post-warmup draws per chain (default 2000)");
  fit_cmd->add_option("--seed", seed, "sampler seed");
  fit_cmd->add_option("--target-accept", target_accept, "dual-averaging target (default 0.8)");
  fit_cmd->add_option("--max-treedepth", max_treedepth, "trajectory doubling cap (default 10)");
  fit_cmd->add_option("--threads", threads, "chain threads (default BPC_THREADS or hardware)");
  fit_cmd->add_option("--init-radius", init_radius, "uniform init half width (default 2)");
  fit_cmd->add_option("--prior-lambda-sd", prior_lambda_sd, "prior sd of lambda");
  fit_cmd->add_option("--prior-nu-sd", prior_nu_sd, "prior sd of nu");
  fit_cmd->add_option("--prior-gamma-sd", prior_gamma_sd, "prior sd of gamma");
  fit_cmd->add_option("--prior-beta-sd", prior_beta_sd, "prior sd of beta");
  fit_cmd->add_option("--prior-s-sd", prior_s_sd, "prior sd of subject coefficients");
  fit_cmd->add_option("--prior-u-sd", prior_u_sd, "half-normal sd of U_std");
  fit_cmd->add_option("--out", out_path, "fit archive to write")->required();

  // ---- fit-archive consumers ----
  std::string fit_path, new_path, params_filter, plot_out;
  std::uint64_t predict_seed = 0;
  std::size_t ndraws = 0;
  bool standardized = false, use_loo = false;
  std::vector<std::string> compare_fits;

  TableFlags summary_flags, ranks_flags, prob_flags, predict_flags;
  std::string diag_format = "text", ic_format = "text", compare_format = "text";
  std::string ic_data;

  auto* summary_cmd = app.add_subcommand("summary", "parameter, probability and rank tables");
  summary_cmd->add_option("--fit", fit_path, "fit archive")->required();
  summary_flags.attach(summary_cmd, true);

  auto* ranks_cmd = app.add_subcommand("ranks", "posterior rank table");
  ranks_cmd->add_option("--fit", fit_path, "fit archive")->required();
  ranks_flags.attach(ranks_cmd, false);

  auto* prob_cmd = app.add_subcommand("probabilities", "pairwise win probability table");
  prob_cmd->add_option("--fit", fit_path, "fit archive")->required();
  prob_flags.attach(prob_cmd, false);

  auto* predict_cmd = app.add_subcommand("predict", "posterior predictions for new contests");
  predict_cmd->add_option("--fit", fit_path, "fit archive")->required();
  predict_cmd->add_option("--new", new_path, "CSV of new contests")->required();
  predict_cmd->add_option("--ndraws", ndraws, "posterior draws per row (default: all)");
  predict_cmd->add_option("--seed", predict_seed, "outcome sampling seed");
  predict_cmd->add_flag("--standardized", standardized,
                        "covariates are already on the standardized scale");
  predict_flags.attach(predict_cmd, false);

  auto* diag_cmd = app.add_subcommand("diagnose", "convergence and sampler health checks");
  diag_cmd->add_option("--fit", fit_path, "fit archive")->required();
  diag_cmd->add_option("--format", diag_format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* waic_cmd = app.add_subcommand("waic", "widely applicable information criterion");
  waic_cmd->add_option("--fit", fit_path, "fit archive")->required();
  waic_cmd->add_option("--data", ic_data, "training data CSV (fingerprint checked)")->required();
  waic_cmd->add_option("--format", ic_format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* loo_cmd = app.add_subcommand("loo", "PSIS leave-one-out cross-validation");
  loo_cmd->add_option("--fit", fit_path, "fit archive")->required();
  loo_cmd->add_option("--data", ic_data, "training data CSV (fingerprint checked)")->required();
  loo_cmd->add_option("--format", ic_format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* compare_cmd = app.add_subcommand("compare", "rank fits by expected predictive accuracy");
  compare_cmd->add_option("--data", ic_data, "training data CSV shared by the fits")->required();
  compare_cmd->add_flag("--loo", use_loo, "use PSIS-LOO instead of WAIC");
  compare_cmd->add_option("--format", compare_format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  compare_cmd->add_option("fits", compare_fits, "fit archives")->required()->expected(2, -1);

  auto* plot_cmd = app.add_subcommand("plotdata", "long-format draws for external plotting");
  plot_cmd->add_option("--fit", fit_path, "fit archive")->required();
  plot_cmd->add_option("--params", params_filter, "comma-separated parameter subset");
  plot_cmd->add_option("--out", plot_out, "write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (fit_cmd->parsed()) {
    // score ingestion replaces the default result column unless one was named
    if (!score0.empty() && result_opt->count() == 0) result.clear();
    bpc_ingest_options ingest{};
    ingest.player0_col = player0.c_str();
    ingest.player1_col = player1.c_str();
    ingest.result_col = result.empty() ? nullptr : result.c_str();
    ingest.score0_col = score0.empty() ? nullptr : score0.c_str();
    ingest.score1_col = score1.empty() ? nullptr : score1.c_str();
    ingest.subject_col = subject.empty() ? nullptr : subject.c_str();
    ingest.order_col = order.empty() ? nullptr : order.c_str();
    ingest.covariate_cols = covariates.empty() ? nullptr : covariates.c_str();
    ingest.player_cov_path = player_data.empty() ? nullptr : player_data.c_str();
    ingest.player_cov_cols = player_covs.empty() ? nullptr : player_covs.c_str();
    ingest.solve_ties = solve_ties == "random"   ? BPC_TIES_RANDOM
                        : solve_ties == "remove" ? BPC_TIES_REMOVE
                                                 : BPC_TIES_NONE;
    ingest.tie_seed = tie_seed;
    ingest.delimiter = delimiter.empty() ? ',' : delimiter[0];

    DatasetHandle ds;
    bpc_status st = bpc_dataset_load(data_path.c_str(), &ingest, &ds.ds);
    if (st != BPC_OK) return fail_with(st);

    bpc_prior_options priors{prior_lambda_sd, prior_nu_sd, prior_gamma_sd,
                             prior_beta_sd,   prior_s_sd,  prior_u_sd};
    bpc_model* model_handle = nullptr;
    st = bpc_model_build(ds.ds, model.c_str(), &priors, &model_handle);
    if (st != BPC_OK) return fail_with(st);
    std::unique_ptr<bpc_model, decltype(&bpc_model_free)> model_guard(model_handle,
                                                                      &bpc_model_free);

    bpc_sampler_options sampler{};
    sampler.chains = chains;
    sampler.warmup = warmup;
    sampler.draws = draws;
    sampler.target_accept = target_accept;
    sampler.max_treedepth = max_treedepth;
    sampler.seed = seed;
    sampler.init_radius = init_radius;
    sampler.threads = threads;

    FitHandle fit;
    st = bpc_sample(model_handle, &sampler, &fit.fit);
    if (st != BPC_OK) return fail_with(st);
    st = bpc_fit_save(fit.fit, out_path.c_str());
    if (st != BPC_OK) return fail_with(st);
    std::cout << "wrote " << out_path << ": model " << model << ", "
              << bpc_fit_num_chains(fit.fit) << " chains x " << bpc_fit_draws_per_chain(fit.fit)
              << " draws, " << bpc_fit_dimension(fit.fit) << " parameters ("
              << bpc_dataset_num_contests(ds.ds) << " contests, "
              << bpc_dataset_num_players(ds.ds) << " players)\n";
    return 0;
  }

  if (compare_cmd->parsed()) {
    std::vector<bpc_fit*> fits;
    std::vector<bpc_dataset*> datasets;
    std::vector<std::string> names;
    auto cleanup = [&]() {
      for (auto* f : fits) bpc_fit_free(f);
      for (auto* d : datasets) bpc_dataset_free(d);
    };
    bpc_status st = BPC_OK;
    for (const auto& path : compare_fits) {
      bpc_fit* f = nullptr;
      st = bpc_fit_load(path.c_str(), &f);
      if (st != BPC_OK) break;
      fits.push_back(f);
      bpc_dataset* d = nullptr;
      st = bpc_fit_load_dataset(f, ic_data.c_str(), &d);
      if (st != BPC_OK) break;
      datasets.push_back(d);
      names.push_back(path);
    }
    if (st != BPC_OK) {
      cleanup();
      return fail_with(st);
    }
    std::vector<const bpc_fit*> cfits(fits.begin(), fits.end());
    std::vector<const bpc_dataset*> cdatasets(datasets.begin(), datasets.end());
    std::vector<const char*> cnames;
    for (const auto& n : names) cnames.push_back(n.c_str());
    StringOut text;
    st = bpc_render_compare(cfits.data(), cdatasets.data(), cnames.data(), cfits.size(),
                            use_loo ? 1 : 0, parse_format_flag(compare_format), &text.value);
    cleanup();
    if (st != BPC_OK) return fail_with(st);
    std::cout << text.value;
    return 0;
  }

  FitHandle fit;
  if (const int rc = load_fit_or_fail(fit_path, fit); rc != 0) return rc;

  if (summary_cmd->parsed() || ranks_cmd->parsed() || prob_cmd->parsed()) {
    const TableFlags& flags = summary_cmd->parsed() ? summary_flags
                              : ranks_cmd->parsed() ? ranks_flags
                                                    : prob_flags;
    const bpc_table_options opts = flags.options();
    StringOut text;
    bpc_status st;
    if (summary_cmd->parsed())
      st = bpc_render_summary(fit.fit, &opts, &text.value);
    else if (ranks_cmd->parsed())
      st = bpc_render_ranks(fit.fit, &opts, &text.value);
    else
      st = bpc_render_probabilities(fit.fit, &opts, &text.value);
    if (st != BPC_OK) return fail_with(st);
    std::cout << text.value;
    return 0;
  }

  if (predict_cmd->parsed()) {
    const bpc_table_options opts = predict_flags.options();
    StringOut text;
    const bpc_status st = bpc_render_predict(fit.fit, new_path.c_str(), ndraws, predict_seed,
                                             standardized ? 1 : 0, opts.format, &text.value);
    if (st != BPC_OK) return fail_with(st);
    std::cout << text.value;
    return 0;
  }

  if (diag_cmd->parsed()) {
    StringOut text;
    int pass = 0;
    const bpc_status st =
        bpc_render_diagnostics(fit.fit, parse_format_flag(diag_format), &text.value, &pass);
    if (st != BPC_OK) return fail_with(st);
    std::cout << text.value;
    return 0;
  }

  if (waic_cmd->parsed() || loo_cmd->parsed()) {
    DatasetHandle ds;
    bpc_status st = bpc_fit_load_dataset(fit.fit, ic_data.c_str(), &ds.ds);
    if (st != BPC_OK) return fail_with(st);
    StringOut text;
    st = waic_cmd->parsed()
             ? bpc_render_waic(fit.fit, ds.ds, parse_format_flag(ic_format), &text.value)
             : bpc_render_loo(fit.fit, ds.ds, parse_format_flag(ic_format), &text.value);
    if (st != BPC_OK) return fail_with(st);
    std::cout << text.value;
    return 0;
  }

  if (plot_cmd->parsed()) {
    StringOut text;
    const bpc_status st = bpc_render_plotdata(
        fit.fit, params_filter.empty() ? nullptr : params_filter.c_str(), &text.value);
    if (st != BPC_OK) return fail_with(st);
    if (plot_out.empty()) {
      std::cout << text.value;
    } else {
      std::ofstream out(plot_out, std::ios::binary | std::ios::trunc);
      if (!out) {
        std::cerr << "error [IoError]: cannot open '" << plot_out << "' for writing\n";
        return 4;
      }
      out << text.value;
    }
    return 0;
  }

  return 1;
}

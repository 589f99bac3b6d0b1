#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "bpc.h"

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content = "") : path(name) {
    if (!content.empty()) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << content;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string small_csv() {
  std::string csv = "player0,player1,result\n";
  // deterministic alternating outcomes across three players
  const char* rows[] = {"A,B,1", "A,B,0", "A,C,1", "B,C,1", "C,A,0", "B,A,1",
                        "C,B,0", "A,C,1", "B,C,0", "A,B,1", "C,A,1", "B,A,0"};
  for (const char* r : rows) {
    csv += r;
    csv += "\n";
  }
  return csv;
}

}  // namespace

TEST_CASE("c api end to end") {
  TempFile data("capi_data.csv", small_csv());

  bpc_ingest_options ingest{};
  ingest.player0_col = "player0";
  ingest.player1_col = "player1";
  ingest.result_col = "result";

  bpc_dataset* ds = nullptr;
  REQUIRE(bpc_dataset_load(data.path.c_str(), &ingest, &ds) == BPC_OK);
  CHECK(bpc_dataset_num_contests(ds) == 12);
  CHECK(bpc_dataset_num_players(ds) == 3);

  bpc_model* model = nullptr;
  REQUIRE(bpc_model_build(ds, "bt", nullptr, &model) == BPC_OK);

  bpc_sampler_options sampler{};
  sampler.chains = 2;
  sampler.warmup = 200;
  sampler.draws = 150;
  sampler.seed = 99;
  bpc_fit* fit = nullptr;
  REQUIRE(bpc_sample(model, &sampler, &fit) == BPC_OK);
  CHECK(bpc_fit_num_chains(fit) == 2);
  CHECK(bpc_fit_draws_per_chain(fit) == 150);
  CHECK(bpc_fit_dimension(fit) == 3);

  bpc_table_options table{};
  char* text = nullptr;
  REQUIRE(bpc_render_summary(fit, &table, &text) == BPC_OK);
  std::string summary(text);
  bpc_string_free(text);
  CHECK(summary.find("Parameter              Mean   Median") != std::string::npos);
  CHECK(summary.find("Estimated posterior ranks") != std::string::npos);

  int pass = -1;
  text = nullptr;
  REQUIRE(bpc_render_diagnostics(fit, BPC_FORMAT_TEXT, &text, &pass) == BPC_OK);
  bpc_string_free(text);
  CHECK((pass == 0 || pass == 1));

  TempFile archive("capi_fit.bpc");
  REQUIRE(bpc_fit_save(fit, archive.path.c_str()) == BPC_OK);
  bpc_fit* loaded = nullptr;
  REQUIRE(bpc_fit_load(archive.path.c_str(), &loaded) == BPC_OK);

  // identical summaries after the round trip
  char* text2 = nullptr;
  REQUIRE(bpc_render_summary(loaded, &table, &text2) == BPC_OK);
  CHECK(summary == text2);
  bpc_string_free(text2);

  // data-dependent scoring through the archived ingest spec
  bpc_dataset* reloaded = nullptr;
  REQUIRE(bpc_fit_load_dataset(loaded, data.path.c_str(), &reloaded) == BPC_OK);
  text = nullptr;
  REQUIRE(bpc_render_waic(loaded, reloaded, BPC_FORMAT_TEXT, &text) == BPC_OK);
  std::string waic_text(text);
  bpc_string_free(text);
  CHECK(waic_text.find("Computed from 300 by 12 log-likelihood matrix") != std::string::npos);
  CHECK(waic_text.find("elpd_waic") != std::string::npos);

  text = nullptr;
  REQUIRE(bpc_render_loo(loaded, reloaded, BPC_FORMAT_TEXT, &text) == BPC_OK);
  std::string loo_text(text);
  bpc_string_free(text);
  CHECK(loo_text.find("elpd_loo") != std::string::npos);

  // predictions for a new pairing
  TempFile newdata("capi_new.csv", "player0,player1\nA,C\nB,C\n");
  text = nullptr;
  REQUIRE(bpc_render_predict(loaded, newdata.path.c_str(), 50, 7, 0, BPC_FORMAT_CSV, &text) ==
          BPC_OK);
  std::string pred(text);
  bpc_string_free(text);
  CHECK(pred.find("player0,player1,p_player0,p_player1") != std::string::npos);

  text = nullptr;
  REQUIRE(bpc_render_plotdata(loaded, "lambda[A]", &text) == BPC_OK);
  CHECK(std::string(text).find("lambda[A],1,1,") != std::string::npos);
  bpc_string_free(text);

  bpc_dataset_free(reloaded);
  bpc_fit_free(loaded);
  bpc_fit_free(fit);
  bpc_model_free(model);
  bpc_dataset_free(ds);
}

TEST_CASE("c api predict with subject covariates") {
  std::string csv = "player0,player1,result,judge,hloc\n";
  const char* rows[] = {"A,B,1,s1,0.5", "B,A,0,s1,0.5", "A,B,1,s2,-1.0", "B,A,1,s2,-1.0",
                        "A,B,0,s3,2.0", "B,A,0,s3,2.0", "A,B,1,s4,0.0", "B,A,1,s4,0.0",
                        "A,B,0,s5,1.0", "B,A,1,s5,1.0", "A,B,1,s6,-0.5", "B,A,0,s6,-0.5"};
  for (const char* r : rows) {
    csv += r;
    csv += "\n";
  }
  TempFile data("capi_sp.csv", csv);

  bpc_ingest_options ingest{};
  ingest.player0_col = "player0";
  ingest.player1_col = "player1";
  ingest.result_col = "result";
  ingest.subject_col = "judge";
  ingest.covariate_cols = "hloc";

  bpc_dataset* ds = nullptr;
  REQUIRE(bpc_dataset_load(data.path.c_str(), &ingest, &ds) == BPC_OK);
  bpc_model* model = nullptr;
  REQUIRE(bpc_model_build(ds, "bt-S", nullptr, &model) == BPC_OK);
  bpc_sampler_options sampler{};
  sampler.chains = 1;
  sampler.warmup = 150;
  sampler.draws = 80;
  sampler.seed = 4;
  bpc_fit* fit = nullptr;
  REQUIRE(bpc_sample(model, &sampler, &fit) == BPC_OK);

  TempFile newdata("capi_sp_new.csv", "player0,player1,hloc\nA,B,1.5\n");
  char* text = nullptr;
  REQUIRE(bpc_render_predict(fit, newdata.path.c_str(), 0, 1, 0, BPC_FORMAT_CSV, &text) == BPC_OK);
  CHECK(std::string(text).find("A,B,") != std::string::npos);
  bpc_string_free(text);

  TempFile nocov("capi_sp_missing.csv", "player0,player1\nA,B\n");
  text = nullptr;
  CHECK(bpc_render_predict(fit, nocov.path.c_str(), 0, 1, 0, BPC_FORMAT_CSV, &text) ==
        BPC_ERR_MISSING_COVARIATE);

  bpc_fit_free(fit);
  bpc_model_free(model);
  bpc_dataset_free(ds);
}

TEST_CASE("c api compare") {
  TempFile data("capi_cmp.csv", small_csv());
  bpc_ingest_options ingest{};
  ingest.player0_col = "player0";
  ingest.player1_col = "player1";
  ingest.result_col = "result";

  bpc_dataset* ds = nullptr;
  REQUIRE(bpc_dataset_load(data.path.c_str(), &ingest, &ds) == BPC_OK);
  bpc_sampler_options sampler{};
  sampler.chains = 1;
  sampler.warmup = 150;
  sampler.draws = 100;
  sampler.seed = 12;

  bpc_model* m1 = nullptr;
  bpc_model* m2 = nullptr;
  REQUIRE(bpc_model_build(ds, "bt", nullptr, &m1) == BPC_OK);
  REQUIRE(bpc_model_build(ds, "bt-ordereffect", nullptr, &m2) == BPC_OK);
  bpc_fit* f1 = nullptr;
  bpc_fit* f2 = nullptr;
  REQUIRE(bpc_sample(m1, &sampler, &f1) == BPC_OK);
  REQUIRE(bpc_sample(m2, &sampler, &f2) == BPC_OK);

  const bpc_fit* fits[] = {f1, f2};
  const bpc_dataset* datasets[] = {ds, ds};
  const char* names[] = {"bt", "bt-ordereffect"};
  char* text = nullptr;
  REQUIRE(bpc_render_compare(fits, datasets, names, 2, /*use_loo=*/1, BPC_FORMAT_TEXT, &text) ==
          BPC_OK);
  const std::string cmp(text);
  bpc_string_free(text);
  CHECK(cmp.find("elpd_diff") != std::string::npos);
  CHECK(cmp.find("looic") != std::string::npos);
  CHECK(cmp.find("bt-ordereffect") != std::string::npos);

  bpc_fit_free(f1);
  bpc_fit_free(f2);
  bpc_model_free(m1);
  bpc_model_free(m2);
  bpc_dataset_free(ds);
}

TEST_CASE("c api error reporting") {
  bpc_dataset* ds = nullptr;
  bpc_ingest_options ingest{};
  ingest.player0_col = "player0";
  ingest.player1_col = "player1";
  ingest.result_col = "result";

  SUBCASE("missing file") {
    const bpc_status st = bpc_dataset_load("no_such_file.csv", &ingest, &ds);
    CHECK(st == BPC_ERR_IO);
    CHECK(bpc_status_exit_class(st) == 4);
    CHECK(std::string(bpc_last_error()).find("no_such_file.csv") != std::string::npos);
  }

  SUBCASE("unknown model token") {
    TempFile data("capi_err.csv", small_csv());
    REQUIRE(bpc_dataset_load(data.path.c_str(), &ingest, &ds) == BPC_OK);
    bpc_model* model = nullptr;
    const bpc_status st = bpc_model_build(ds, "bt-elo", nullptr, &model);
    CHECK(st == BPC_ERR_UNKNOWN_MODEL);
    CHECK(bpc_status_exit_class(st) == 1);
    CHECK(std::string(bpc_status_name(st)) == "UnknownModel");
    bpc_dataset_free(ds);
  }

  SUBCASE("ties demand a davidson base") {
    TempFile data("capi_tie.csv", "player0,player1,result\nA,B,2\nA,B,1\n");
    REQUIRE(bpc_dataset_load(data.path.c_str(), &ingest, &ds) == BPC_OK);
    bpc_model* model = nullptr;
    const bpc_status st = bpc_model_build(ds, "bt", nullptr, &model);
    CHECK(st == BPC_ERR_TIE_WITHOUT_DAVIDSON);
    CHECK(bpc_status_exit_class(st) == 2);
    bpc_dataset_free(ds);
  }

  SUBCASE("corrupt archive") {
    TempFile junk("capi_junk.bpc", "not an archive");
    bpc_fit* fit = nullptr;
    const bpc_status st = bpc_fit_load(junk.path.c_str(), &fit);
    CHECK(st == BPC_ERR_CORRUPT_ARCHIVE);
    CHECK(bpc_status_exit_class(st) == 4);
  }
}

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "core/archive.hpp"
#include "core/csv.hpp"
#include "core/fit.hpp"
#include "core/render.hpp"
#include "support/synthetic.hpp"

using namespace bpc;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content = "") : path(name) {
    if (!content.empty()) synth::write_file(path, content);
  }
  ~TempFile() { std::remove(path.c_str()); }
};

IngestSpec basic_spec(const std::string& path) {
  IngestSpec spec;
  spec.path = path;
  spec.player0_col = "player0";
  spec.player1_col = "player1";
  spec.result_col = "result";
  return spec;
}

PosteriorFit quick_fit(std::uint64_t seed = 123) {
  auto ds = synth::bt_dataset({0.6, 0.0, -0.6}, 150, 101);
  CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 200;
  cfg.draws = 120;
  cfg.seed = seed;
  return sample(m, cfg);
}

}  // namespace

TEST_CASE("csv ingestion") {
  SUBCASE("tie strategies") {
    TempFile f("io_ties.csv",
               "player0,player1,result\nA,B,0\nA,C,1\nB,C,2\nA,B,2\nC,A,2\nB,A,2\nC,B,2\n");
    IngestSpec spec = basic_spec(f.path);

    spec.solve_ties = TieStrategy::Remove;
    CHECK(load_dataset(spec).num_contests() == 2);

    spec.solve_ties = TieStrategy::None;
    ContestDataset kept = load_dataset(spec);
    CHECK(kept.num_contests() == 7);
    CHECK(kept.tie_count() == 5);
    try {
      build_model(kept, ModelSpec::parse("bt"));
      FAIL("expected TieWithoutDavidson");
    } catch (const Error& e) {
      CHECK(e.code() == Status::TieWithoutDavidson);
      CHECK(std::string(e.what()).find("5") != std::string::npos);
    }

    spec.solve_ties = TieStrategy::Random;
    spec.tie_seed = 77;
    ContestDataset r1 = load_dataset(spec);
    ContestDataset r2 = load_dataset(spec);
    CHECK(r1.tie_count() == 0);
    REQUIRE(r1.num_contests() == r2.num_contests());
    for (std::size_t i = 0; i < r1.num_contests(); ++i)
      CHECK(r1.contests[i].outcome == r2.contests[i].outcome);
  }

  SUBCASE("score columns derive results") {
    TempFile f("io_scores.csv", "p0,p1,s0,s1\nA,B,3,1\nA,B,1,3\nA,B,2,2\n");
    IngestSpec spec;
    spec.path = f.path;
    spec.player0_col = "p0";
    spec.player1_col = "p1";
    spec.score0_col = "s0";
    spec.score1_col = "s1";
    const ContestDataset ds = load_dataset(spec);
    CHECK(ds.contests[0].outcome == OutcomeKind::Player0Wins);
    CHECK(ds.contests[1].outcome == OutcomeKind::Player1Wins);
    CHECK(ds.contests[2].outcome == OutcomeKind::Tie);
  }

  SUBCASE("error paths") {
    TempFile bad_result("io_bad_result.csv", "player0,player1,result\nA,B,3\n");
    try {
      load_dataset(basic_spec(bad_result.path));
      FAIL("expected BadResultValue");
    } catch (const Error& e) {
      CHECK(e.code() == Status::BadResultValue);
    }

    TempFile missing("io_missing.csv", "p0,p1,result\nA,B,1\n");
    try {
      load_dataset(basic_spec(missing.path));
      FAIL("expected MissingColumn");
    } catch (const Error& e) {
      CHECK(e.code() == Status::MissingColumn);
    }

    TempFile all_ties("io_all_ties.csv", "player0,player1,result\nA,B,2\nB,C,2\n");
    IngestSpec spec = basic_spec(all_ties.path);
    spec.solve_ties = TieStrategy::Remove;
    try {
      load_dataset(spec);
      FAIL("expected EmptyAfterTieRemoval");
    } catch (const Error& e) {
      CHECK(e.code() == Status::EmptyAfterTieRemoval);
    }

    try {
      load_dataset(basic_spec("does_not_exist.csv"));
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == Status::IoError);
    }
  }

  SUBCASE("subject, order and covariate columns") {
    TempFile f("io_full.csv",
               "player0,player1,result,judge,pos,age\nA,B,1,s1,1,30\nB,C,0,s2,0,40\nA,C,1,s1,1,30\n");
    IngestSpec spec = basic_spec(f.path);
    spec.subject_col = "judge";
    spec.order_col = "pos";
    spec.covariate_cols = {"age"};
    const ContestDataset ds = load_dataset(spec);
    CHECK(ds.num_subjects() == 2);
    CHECK(ds.contests[1].order_indicator == 0);
    CHECK(ds.contests[1].covariates[0] == 40.0);
    CHECK(ds.fingerprint.size() == 16);
  }

  SUBCASE("player covariate table") {
    TempFile data("io_gen.csv", "player0,player1,result\nA,B,1\nB,C,0\nA,C,1\n");
    TempFile pc("io_gen_players.csv", "player,speed,size\nA,1.0,7\nB,2.0,9\nC,3.0,8\nZZZ,9,9\n");
    IngestSpec spec = basic_spec(data.path);
    spec.player_cov_path = pc.path;
    const ContestDataset ds = load_dataset(spec);
    REQUIRE(ds.player_covariate_names.size() == 2);
    CHECK(ds.player_covariate(0, 0) == 1.0);
    CHECK(ds.player_covariate(2, 1) == 8.0);

    TempFile partial("io_gen_partial.csv", "player,speed\nA,1.0\nB,2.0\n");
    spec.player_cov_path = partial.path;
    try {
      load_dataset(spec);
      FAIL("expected MissingColumn for player C");
    } catch (const Error& e) {
      CHECK(e.code() == Status::MissingColumn);
    }
  }

  SUBCASE("quoted fields") {
    TempFile f("io_quoted.csv", "player0,player1,result\n\"Red, Barron\",\"aKroger\",1\nTombstone,\"Red, Barron\",0\n");
    const ContestDataset ds = load_dataset(basic_spec(f.path));
    CHECK(ds.players[0] == "Red, Barron");
    CHECK(ds.num_players() == 3);
  }
}

TEST_CASE("archive round trip") {
  PosteriorFit fit = quick_fit();
  fit.info.data_fingerprint = "0011223344556677";
  fit.ingest = basic_spec("train.csv");
  TempFile archive("io_fit.bpc");
  save_fit(fit, archive.path);
  const PosteriorFit loaded = load_fit(archive.path);

  CHECK(loaded.info.spec.model_string() == "bt");
  CHECK(loaded.info.players == fit.info.players);
  CHECK(loaded.config.seed == fit.config.seed);
  CHECK(loaded.ingest.player0_col == "player0");
  CHECK(loaded.info.data_fingerprint == "0011223344556677");
  REQUIRE(loaded.num_chains() == fit.num_chains());
  for (std::size_t c = 0; c < fit.num_chains(); ++c) {
    CHECK(loaded.chains[c].draws == fit.chains[c].draws);
    CHECK(loaded.chains[c].step_size == fit.chains[c].step_size);
    CHECK(loaded.chains[c].inv_mass == fit.chains[c].inv_mass);
    for (std::size_t d = 0; d < fit.draws_per_chain(); ++d) {
      CHECK(loaded.chains[c].stats[d].energy == fit.chains[c].stats[d].energy);
      CHECK(loaded.chains[c].stats[d].divergent == fit.chains[c].stats[d].divergent);
    }
  }

  TableOptions opts;
  CHECK(render_summary(loaded, opts) == render_summary(fit, opts));
}

TEST_CASE("archive integrity") {
  PosteriorFit fit = quick_fit(321);
  TempFile archive("io_fit2.bpc");
  save_fit(fit, archive.path);

  SUBCASE("truncation by one byte") {
    std::ifstream in(archive.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bytes.pop_back();
    synth::write_file(archive.path, bytes);
    try {
      load_fit(archive.path);
      FAIL("expected CorruptArchive");
    } catch (const Error& e) {
      CHECK(e.code() == Status::CorruptArchive);
    }
  }

  SUBCASE("flipped payload byte") {
    std::ifstream in(archive.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
    synth::write_file(archive.path, bytes);
    try {
      load_fit(archive.path);
      FAIL("expected CorruptArchive");
    } catch (const Error& e) {
      CHECK(e.code() == Status::CorruptArchive);
    }
  }

  SUBCASE("future format version") {
    save_fit_with_version(fit, archive.path, 99);
    try {
      load_fit(archive.path);
      FAIL("expected VersionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Status::VersionMismatch);
    }
  }

  SUBCASE("not an archive at all") {
    synth::write_file(archive.path, "just some text\n");
    try {
      load_fit(archive.path);
      FAIL("expected CorruptArchive");
    } catch (const Error& e) {
      CHECK(e.code() == Status::CorruptArchive);
    }
  }
}

TEST_CASE("dataset fingerprint checking") {
  const std::string csv = "player0,player1,result\nA,B,1\nB,C,0\nA,C,1\nC,B,1\n";
  TempFile data("io_fp.csv", csv);
  IngestSpec spec = basic_spec(data.path);
  const ContestDataset ds = load_dataset(spec);
  CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.warmup = 150;
  cfg.draws = 60;
  cfg.seed = 9;
  PosteriorFit fit = sample(m, cfg);
  fit.ingest = spec;

  SUBCASE("identical content passes") {
    const ContestDataset again = load_fit_dataset(fit, data.path);
    CHECK(again.num_contests() == 4);
  }
  SUBCASE("one flipped result is rejected") {
    std::string edited = csv;
    edited[edited.find("A,B,1") + 4] = '0';
    TempFile other("io_fp_edit.csv", edited);
    try {
      load_fit_dataset(fit, other.path);
      FAIL("expected DataFingerprintMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Status::DataFingerprintMismatch);
    }
  }
}

TEST_CASE("render formats hold the listing layout") {
  PosteriorFit fit = quick_fit(55);
  TableOptions opts;
  const std::string text = render_summary(fit, opts);
  CHECK(text.find("Parameter              Mean   Median   HPD_lower   HPD_higher") !=
        std::string::npos);
  CHECK(text.find("Estimated posterior ranks") != std::string::npos);
  CHECK(text.find("Table: Parameters estimates") != std::string::npos);
  CHECK(text.find("i_beats_j   j_beats_i") != std::string::npos);
  CHECK(text.find("MedianRank   MeanRank   StdRank") != std::string::npos);

  opts.format = OutputFormat::Csv;
  const std::string csv = render_summary(fit, opts);
  CHECK(csv.find("parameter,mean,median,hpd_lower,hpd_higher,ess") != std::string::npos);

  opts.format = OutputFormat::Json;
  const std::string js = render_summary(fit, opts);
  CHECK(js.find("\"parameters\"") != std::string::npos);

  const std::string plot = render_plotdata(fit, {"lambda[P1]"});
  CHECK(plot.rfind("parameter,chain,draw,value\n", 0) == 0);
  CHECK(plot.find("lambda[P1],1,1,") != std::string::npos);
  CHECK(plot.find("lambda[P2]") == std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "core/fit.hpp"
#include "core/model.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace bpc;

namespace {

ContestDataset tiny_bt(std::size_t players = 2) {
  DatasetBuilder b;
  const auto names = synth::player_names(players);
  for (const auto& n : names) b.intern_player(n);
  b.add_contest(names[0], names[1], OutcomeKind::Player1Wins);
  return b.finish();
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("model string parsing") {
  ModelSpec s = ModelSpec::parse("davidson-generalized-U");
  CHECK(s.base == BaseModel::Davidson);
  CHECK(s.generalized);
  CHECK(s.random_effects);
  CHECK_FALSE(s.order_effect);
  CHECK(s.model_string() == "davidson-generalized-U");

  CHECK_THROWS_AS(ModelSpec::parse("glicko"), Error);
  CHECK_THROWS_AS(ModelSpec::parse("bt-ordereffect-ordereffect"), Error);
  try {
    ModelSpec::parse("bt-u");
  } catch (const Error& e) {
    CHECK(e.code() == Status::UnknownModel);
    CHECK(std::string(e.what()).find("generalized") != std::string::npos);
  }
}

TEST_CASE("layout shapes") {
  SUBCASE("plain bt, 5 players") {
    auto ds = synth::bt_dataset({0, 0, 0, 0, 0}, 10, 1);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    CHECK(m.layout().dimension() == 5);
    CHECK(m.layout().slots[0].name == "lambda[P1]");
  }
  SUBCASE("davidson + ordereffect, 6 players") {
    auto ds = synth::davidson_dataset({0, 0, 0, 0, 0, 0}, 0.0, 30, 2);
    CompiledModel m = build_model(ds, ModelSpec::parse("davidson-ordereffect"));
    CHECK(m.layout().dimension() == 8);  // 6 lambda + nu + gamma
    CHECK(m.layout().index_of("nu") == 6);
    CHECK(m.layout().index_of("gamma") == 7);
  }
  SUBCASE("generalized drops the lambda block") {
    auto ds = synth::generalized_dataset({{1, 0, 2}, {0, 1, -1}, {-1, -1, 0}}, {0.5, 0.2, 0.1},
                                         30, 3);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-generalized"));
    CHECK(m.layout().dimension() == 3);
    CHECK(m.layout().lambda_count == 0);
    CHECK(m.layout().slots[0].name == "beta[x1]");
  }
}

TEST_CASE("build_model validation") {
  SUBCASE("ties without davidson") {
    DatasetBuilder b;
    b.add_contest("A", "B", OutcomeKind::Tie);
    b.add_contest("A", "B", OutcomeKind::Player0Wins);
    auto ds = b.finish();
    try {
      build_model(ds, ModelSpec::parse("bt"));
      FAIL("expected TieWithoutDavidson");
    } catch (const Error& e) {
      CHECK(e.code() == Status::TieWithoutDavidson);
      CHECK(std::string(e.what()).find("1 tie rows") != std::string::npos);
    }
  }
  SUBCASE("single player rejected") {
    DatasetBuilder b;
    b.intern_player("A");
    CHECK_THROWS_AS(build_model(b.finish(), ModelSpec::parse("bt")), Error);
  }
  SUBCASE("constant covariate rejected") {
    auto ds = synth::bt_dataset({0, 0}, 10, 4);
    ds.player_covariate_names = {"flat"};
    ds.player_covariates = {1.0, 1.0};
    try {
      build_model(ds, ModelSpec::parse("bt-generalized"));
      FAIL("expected ConstantCovariate");
    } catch (const Error& e) {
      CHECK(e.code() == Status::ConstantCovariate);
    }
  }
  SUBCASE("extensions need their columns") {
    auto ds = synth::bt_dataset({0, 0}, 10, 5);
    CHECK_THROWS_AS(build_model(ds, ModelSpec::parse("bt-generalized")), Error);
    CHECK_THROWS_AS(build_model(ds, ModelSpec::parse("bt-U")), Error);
    CHECK_THROWS_AS(build_model(ds, ModelSpec::parse("bt-S")), Error);
  }
}

TEST_CASE("bt win probability") {
  CHECK(bt_win_probability(0.0, 0.0) == 0.5);
  CHECK(bt_win_probability(1.0, 0.0) == doctest::Approx(0.7310585786300049).epsilon(1e-9));
  CHECK(bt_win_probability(0.0, 0.0, std::log(2.0), 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  SUBCASE("pair sums to one exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-30.0, 30.0);
    for (int i = 0; i < 10000; ++i) {
      const double p = bt_win_probability(unif(rng), unif(rng), unif(rng), i % 2);
      const double q = 1.0 - p;
      CHECK(p + q == 1.0);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);  // saturation at the floating-point limit is allowed
    }
    std::uniform_real_distribution<double> mid(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
      const double p = bt_win_probability(mid(rng), mid(rng), mid(rng), i % 2);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
  SUBCASE("zero order effect is bit-identical") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
      const double li = unif(rng), lj = unif(rng);
      CHECK(bt_win_probability(li, lj, 0.0, 1) == bt_win_probability(li, lj));
    }
  }
  SUBCASE("monotone in both abilities") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    for (int i = 0; i < 1000; ++i) {
      const double li = unif(rng), lj = unif(rng);
      CHECK(bt_win_probability(li + 0.1, lj) > bt_win_probability(li, lj));
      CHECK(bt_win_probability(li, lj + 0.1) < bt_win_probability(li, lj));
    }
  }
}

TEST_CASE("davidson probabilities") {
  SUBCASE("equal abilities, nu 0") {
    const auto p = davidson_probabilities(0, 0, 0);
    CHECK(p.p_i == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(p.p_j == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(p.p_tie == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
  SUBCASE("hand-normalized case") {
    const auto p = davidson_probabilities(1, 0, 0);
    const double z = std::exp(1.0) + 1.0 + std::exp(0.5);
    CHECK(p.p_i == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
    CHECK(p.p_i == doctest::Approx(0.50648).epsilon(1e-4));
    CHECK(p.p_j == doctest::Approx(0.18632).epsilon(1e-4));
    CHECK(p.p_tie == doctest::Approx(0.30719).epsilon(1e-4));
  }
  SUBCASE("nu -> -inf recovers bradley-terry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
      const double li = unif(rng), lj = unif(rng);
      const auto p = davidson_probabilities(li, lj, -30.0);
      CHECK(std::abs(p.p_i - bt_win_probability(li, lj)) < 1e-9);
      CHECK(p.p_tie < 1e-9);
    }
    const auto p0 = davidson_probabilities(0, 0, -30.0);
    CHECK(p0.p_tie == doctest::Approx(9.36e-14).epsilon(0.05));
  }
  SUBCASE("triple sums to one and translation invariance") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unif(-8.0, 8.0);
    for (int i = 0; i < 10000; ++i) {
      const double li = unif(rng), lj = unif(rng), nu = unif(rng), g = unif(rng);
      const double c = unif(rng);
      const auto p = davidson_probabilities(li, lj, nu, g, 1);
      CHECK(std::abs(p.p_i + p.p_j + p.p_tie - 1.0) < 1e-12);
      const auto shifted = davidson_probabilities(li + c, lj + c, nu, g, 1);
      CHECK(std::abs(p.p_i - shifted.p_i) < 1e-12);
      CHECK(std::abs(p.p_tie - shifted.p_tie) < 1e-12);
      const double bt = bt_win_probability(li, lj, g, 1);
      const double bt_shift = bt_win_probability(li + c, lj + c, g, 1);
      CHECK(std::abs(bt - bt_shift) < 1e-12);
    }
  }
}

TEST_CASE("compose ability") {
  SUBCASE("zero random effects leave the baseline") {
    auto ds = synth::random_effects_dataset({0.4, -0.4}, 0.5, 3, 5, 21);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-U"));
    std::vector<double> theta(m.dimension(), 0.0);
    theta[m.layout().lambda_offset + 0] = 0.7;
    theta[m.layout().lambda_offset + 1] = -0.2;
    const auto [lam1, lam0] = m.compose_ability(theta, ds.contests[0]);
    const double base1 = theta[m.layout().lambda_offset + ds.contests[0].player1];
    const double base0 = theta[m.layout().lambda_offset + ds.contests[0].player0];
    CHECK(lam1 == base1);
    CHECK(lam0 == base0);
  }
  SUBCASE("generalized dot product") {
    // raw player covariates chosen so the standardized rows are exactly
    // (1,-1), (0,0), (-1,1)
    auto ds = synth::generalized_dataset({{1, -1}, {0, 0}, {-1, 1}}, {0, 0}, 30, 22);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-generalized"));
    std::vector<double> theta = {0.5, 0.25};
    Contest c;
    c.player0 = 0;
    c.player1 = 1;
    const auto [lam1, lam0] = m.compose_ability(theta, c);
    CHECK(lam0 == doctest::Approx(0.25).epsilon(1e-15));  // 1*0.5 + (-1)*0.25
    CHECK(lam1 == 0.0);
  }
  SUBCASE("subject predictor shift") {
    // covariate column standardizes row 0 to exactly +2
    DatasetBuilder b;
    const std::vector<double> xs = {2.0, -0.5, -0.5, -0.5, -0.5, 0.0};
    for (std::size_t r = 0; r < xs.size(); ++r) {
      b.set_covariate_names({"x"});
      b.add_contest("A", "B", OutcomeKind::Player1Wins, "S" + std::to_string(r), 1, {xs[r]});
    }
    auto ds = b.finish();
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-S"));
    std::vector<double> theta(m.dimension(), 0.0);
    const int p_a = 0;  // player A
    theta[m.layout().lambda_offset + p_a] = 1.0;
    theta[m.layout().subject_offset + p_a * 1 + 0] = -0.5;
    const auto [lam1, lam0] = m.compose_ability(theta, ds.contests[0]);
    CHECK(lam0 == doctest::Approx(0.0).epsilon(1e-15));  // 1 + 2 * (-0.5), player A is player0
    CHECK(lam1 == 0.0);
  }
  SUBCASE("unknown subject rejected") {
    auto ds = synth::random_effects_dataset({0.0, 0.0}, 0.5, 2, 4, 23);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-U"));
    std::vector<double> theta(m.dimension(), 0.0);
    Contest c;
    c.player0 = 0;
    c.player1 = 1;
    c.subject = -1;
    CHECK_THROWS_AS(m.compose_ability(theta, c), Error);
  }
}

TEST_CASE("log posterior values") {
  SUBCASE("single bt contest at the prior mode") {
    auto ds = tiny_bt();
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    const std::vector<double> theta = {0.0, 0.0};
    const double expected = std::log(0.5) + 2.0 * (-0.5 * std::log(2.0 * kPi * 3.0));
    CHECK(m.log_posterior(theta) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("davidson tie at zero") {
    DatasetBuilder b;
    b.add_contest("A", "B", OutcomeKind::Tie);
    CompiledModel m = build_model(b.finish(), ModelSpec::parse("davidson"));
    const std::vector<double> theta = {0.0, 0.0, 0.0};
    const double expected = std::log(1.0 / 3.0) + 3.0 * (-0.5 * std::log(2.0 * kPi * 3.0));
    CHECK(m.log_posterior(theta) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("prior-only model is the sum of prior terms") {
    DatasetBuilder b;
    b.intern_player("A");
    b.intern_player("B");
    CompiledModel m = build_model(b.finish(), ModelSpec::parse("bt"));
    const std::vector<double> theta = {0.3, -0.7};
    const double expected = log_normal_pdf(0.3, 3.0) + log_normal_pdf(-0.7, 3.0);
    CHECK(m.log_posterior(theta) == doctest::Approx(expected).epsilon(1e-13));
  }
  SUBCASE("non-finite density is rejected") {
    auto ds = synth::random_effects_dataset({0.0, 0.0}, 0.5, 2, 4, 24);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-U"));
    std::vector<double> theta(m.dimension(), 0.0);
    theta[m.layout().log_ustd_offset] = 1000.0;  // exp(2t) overflows
    CHECK_THROWS_AS(m.log_posterior(theta), Error);
  }
}

TEST_CASE("gradient hand values") {
  auto ds = tiny_bt();
  CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
  const std::vector<double> theta = {0.0, 0.0};
  const auto grad = m.grad_log_posterior(theta);
  // player1 (the winner) gains 1 - p = 0.5; prior gradient vanishes at 0
  CHECK(grad[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(grad[0] == doctest::Approx(-0.5).epsilon(1e-14));

  DatasetBuilder prior_only;
  prior_only.intern_player("A");
  prior_only.intern_player("B");
  CompiledModel m2 = build_model(prior_only.finish(), ModelSpec::parse("bt"));
  const auto g2 = m2.grad_log_posterior(std::vector<double>{0.0, 0.0});
  CHECK(g2[0] == 0.0);
  CHECK(g2[1] == 0.0);
}

TEST_CASE("gradients match finite differences on every variant") {
  struct Case {
    const char* model;
    ContestDataset ds;
  };
  std::vector<Case> cases;
  cases.push_back({"bt", synth::bt_dataset({0.5, -0.5, 0.2, 0.0}, 60, 31)});
  cases.push_back({"davidson", synth::davidson_dataset({0.5, -0.5, 0.2, 0.0}, -0.3, 60, 32)});
  cases.push_back({"bt-ordereffect", synth::bt_dataset({0.5, -0.5, 0.2}, 60, 33)});
  cases.push_back({"davidson-ordereffect", synth::davidson_dataset({0.3, -0.3, 0.0}, -0.2, 60, 34)});
  cases.push_back(
      {"bt-generalized", synth::generalized_dataset({{1, 0}, {0, 1}, {-1, 2}, {2, -1}},
                                                    {0.4, -0.2}, 60, 35)});
  cases.push_back({"bt-U", synth::random_effects_dataset({0.4, -0.4, 0.0}, 0.6, 4, 20, 36)});
  cases.push_back({"bt-S", synth::subject_predictor_dataset({0.4, -0.4, 0.0}, {0.3, -0.3, 0.1},
                                                            5, 12, 37)});
  cases.push_back({"davidson-ordereffect-U",
                   synth::random_effects_dataset({0.4, -0.4, 0.0}, 0.6, 4, 20, 38)});

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (const auto& test : cases) {
    ModelSpec spec = ModelSpec::parse(test.model);
    ContestDataset ds = test.ds;
    if (spec.base == BaseModel::Davidson && ds.has_ties() == false) {
      // fine: davidson handles tie-free data
    }
    if (spec.base == BaseModel::BradleyTerry && ds.has_ties()) continue;
    CAPTURE(test.model);
    CompiledModel m = build_model(ds, spec);
    for (int point = 0; point < 20; ++point) {
      std::vector<double> theta(m.dimension());
      for (auto& v : theta) v = unif(rng);
      const auto analytic = m.grad_log_posterior(theta);
      const auto numeric = oracle::finite_difference_gradient(
          [&](std::span<const double> x) {
            std::vector<double> scratch(x.begin(), x.end());
            std::vector<double> g(m.dimension());
            return m.log_density_gradient(scratch, g);
          },
          theta);
      for (std::size_t d = 0; d < theta.size(); ++d) {
        CAPTURE(d);
        CHECK(rel_err(analytic[d], numeric[d]) < 1e-5);
      }
    }
  }
}

TEST_CASE("davidson likelihood equals categorical log probability") {
  auto ds = synth::davidson_dataset({0.6, -0.1, -0.5}, -0.4, 40, 41);
  CompiledModel m = build_model(ds, ModelSpec::parse("davidson"));
  std::vector<double> theta(m.dimension());
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (auto& v : theta) v = unif(rng);
  for (std::size_t row = 0; row < ds.num_contests(); ++row) {
    const auto p = m.contest_probabilities(theta, row);
    const double expect = ds.contests[row].outcome == OutcomeKind::Player1Wins ? p.p_i
                          : ds.contests[row].outcome == OutcomeKind::Player0Wins ? p.p_j
                                                                                 : p.p_tie;
    CHECK(m.contest_log_lik(theta, row) == doctest::Approx(std::log(expect)).epsilon(1e-12));
  }
}

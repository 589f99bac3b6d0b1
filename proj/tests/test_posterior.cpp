#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "core/posterior.hpp"
#include "support/fake_fit.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace bpc;

TEST_CASE("hpd interval") {
  SUBCASE("hand-enumerated windows") {
    const std::vector<double> draws = {0, 0, 0, 0, 1, 1, 2, 3, 10};
    const auto [lo, hi] = hpd_interval(draws, 0.5);
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
  SUBCASE("matches the exhaustive reference") {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> draws(rep % 2 == 0 ? 500 : 1000);
      for (auto& v : draws) v = rep % 3 == 0 ? expo(rng) : norm(rng);
      std::sort(draws.begin(), draws.end());
      for (double mass : {0.5, 0.8, 0.9, 0.95}) {
        const auto fast = hpd_interval(draws, mass);
        const auto slow = oracle::brute_force_hpd(draws, mass);
        CHECK(fast.first == slow.first);
        CHECK(fast.second == slow.second);
      }
    }
  }
  SUBCASE("hpd is strictly narrower than equal-tailed on skewed draws") {
    std::mt19937_64 rng(72);
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> draws(10000);
    for (auto& v : draws) v = expo(rng);
    std::sort(draws.begin(), draws.end());
    const auto hpd = hpd_interval(draws, 0.9);
    const auto et = equal_tailed_interval(draws, 0.9);
    CHECK(hpd.second - hpd.first < et.second - et.first);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(hpd_interval(std::vector<double>{1.0}, 0.5), Error);
    CHECK_THROWS_AS(hpd_interval(std::vector<double>{1.0, 2.0}, 1.5), Error);
  }
}

TEST_CASE("quantiles interpolate linearly") {
  const std::vector<double> x = {0, 1, 2, 3};
  CHECK(quantile_sorted(x, 0.5) == doctest::Approx(1.5));
  CHECK(quantile_sorted(x, 0.0) == 0.0);
  CHECK(quantile_sorted(x, 1.0) == 3.0);
  CHECK(quantile_sorted(x, 1.0 / 3.0) == doctest::Approx(1.0));
}

namespace {

PosteriorFit three_player_fit(const std::vector<std::vector<double>>& draws_per_chain) {
  auto ds = synth::bt_dataset({0, 0, 0}, 30, 73, {"A", "B", "C"});
  CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
  return synth::fit_from_draws(m, draws_per_chain);
}

}  // namespace

TEST_CASE("summarize") {
  SUBCASE("single draw is degenerate") {
    auto ds = synth::bt_dataset({0, 0}, 20, 74);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    PosteriorFit fit = synth::fit_from_draws(m, {{0.3, -0.1}});
    const ParameterTable table = summarize(fit);
    CHECK(table.rows[0].mean == 0.3);
    CHECK(table.rows[0].median == 0.3);
    CHECK(table.rows[0].lower == 0.3);
    CHECK(table.rows[0].upper == 0.3);
    CHECK(std::isnan(table.rows[0].ess));
  }
  SUBCASE("u_std is reported on the constrained scale") {
    auto ds = synth::random_effects_dataset({0, 0}, 0.5, 2, 6, 75);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-U"));
    std::vector<double> draw(m.dimension(), 0.0);
    const int slot = m.layout().log_ustd_offset;
    draw[slot] = std::log(0.25);
    draw[m.layout().rawu_offset] = 2.0;
    PosteriorFit fit = synth::fit_from_draws(m, {draw});
    const ParameterTable table = summarize(fit);
    CHECK(table.rows[slot].name == "U_std");
    CHECK(table.rows[slot].mean == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(table.rows[m.layout().rawu_offset].mean == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("rank distribution") {
  SUBCASE("hand-computed ranks") {
    PosteriorFit fit = three_player_fit({{2, 1, 0, 0, 1, 2, 2, 1, 0}});  // 3 draws x 3 players
    const RankSummary ranks = rank_distribution(fit);
    // player A ranks (1,3,1), B (2,2,2), C (3,1,3)
    REQUIRE(ranks.rows.size() == 3);
    CHECK(ranks.rows[0].player == "A");
    CHECK(ranks.rows[0].median_rank == 1.0);
    CHECK(ranks.rows[0].mean_rank == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(ranks.rows[0].sd_rank == doctest::Approx(1.1547005).epsilon(1e-6));
    CHECK(ranks.rows[1].player == "B");
    CHECK(ranks.rows[1].sd_rank == 0.0);
    double mean_sum = 0;
    for (const auto& r : ranks.rows) mean_sum += r.mean_rank;
    CHECK(mean_sum == doctest::Approx(6.0).epsilon(1e-9));
  }
  SUBCASE("identical draws give zero spread") {
    PosteriorFit fit = three_player_fit({{2, 1, 0, 2, 1, 0}});
    for (const auto& r : rank_distribution(fit).rows) CHECK(r.sd_rank == 0.0);
  }
  SUBCASE("per-draw ranks form a permutation on random matrices") {
    std::mt19937_64 rng(76);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> chain;
    for (int d = 0; d < 50; ++d)
      for (int p = 0; p < 3; ++p) chain.push_back(norm(rng));
    PosteriorFit fit = three_player_fit({chain});
    const RankSummary ranks = rank_distribution(fit);
    double mean_sum = 0;
    for (const auto& r : ranks.rows) mean_sum += r.mean_rank;
    CHECK(mean_sum == doctest::Approx(6.0).epsilon(1e-9));  // permutation identity
    for (const auto& r : ranks.rows) {
      CHECK(r.mean_rank >= 1.0);
      CHECK(r.mean_rank <= 3.0);
    }
  }
  SUBCASE("exact ability ties break by registry order") {
    PosteriorFit fit = three_player_fit({{1, 1, 1}});
    const RankSummary ranks = rank_distribution(fit);
    CHECK(ranks.rows[0].player == "A");
    CHECK(ranks.rows[1].player == "B");
    CHECK(ranks.rows[2].player == "C");
    CHECK(ranks.rows[0].median_rank == 1.0);
    CHECK(ranks.rows[2].median_rank == 3.0);
  }
}

TEST_CASE("probability table") {
  SUBCASE("single equal-ability draw") {
    PosteriorFit fit = three_player_fit({{0, 0, 0}});
    const ProbabilityTable table = probability_table(fit);
    REQUIRE(table.rows.size() == 3);
    for (const auto& r : table.rows) {
      CHECK(r.p_i == 0.5);
      CHECK(r.p_j == 0.5);
      CHECK(r.odds == doctest::Approx(1.0));
    }
  }
  SUBCASE("logistic single draw") {
    auto ds = synth::bt_dataset({0, 0}, 20, 77, {"A", "B"});
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    PosteriorFit fit = synth::fit_from_draws(m, {{1.0, 0.0}});
    const ProbabilityTable table = probability_table(fit);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].i == "A");
    CHECK(table.rows[0].p_i == doctest::Approx(0.7310585786).epsilon(1e-9));
    CHECK(table.rows[0].p_j == doctest::Approx(0.2689414214).epsilon(1e-9));
  }
  SUBCASE("five players emit exactly ten rows, lexicographically") {
    auto ds = synth::bt_dataset({0, 0, 0, 0, 0}, 40, 78, {"delta", "Echo", "alpha", "Bravo", "Charlie"});
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    PosteriorFit fit = synth::fit_from_draws(m, {std::vector<double>(5, 0.0)});
    const ProbabilityTable table = probability_table(fit);
    REQUIRE(table.rows.size() == 10);
    CHECK(table.rows[0].i == "alpha");
    CHECK(table.rows[0].j == "Bravo");
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
      const auto key = [](const ProbabilityRow& row) { return row.i + "\x01" + row.j; };
      CHECK(key(table.rows[r - 1]) != key(table.rows[r]));
    }
  }
  SUBCASE("relabeling draws leaves the table unchanged") {
    auto ds = synth::bt_dataset({0.2, -0.2, 0.1}, 40, 82);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt"));
    std::mt19937_64 rng(83);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<std::vector<double>> draws(30, std::vector<double>(m.dimension()));
    for (auto& row : draws)
      for (auto& v : row) v = norm(rng);
    auto flatten = [&](const std::vector<std::vector<double>>& rows) {
      std::vector<double> flat;
      for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
      return flat;
    };
    const ProbabilityTable a = probability_table(synth::fit_from_draws(m, {flatten(draws)}));
    std::shuffle(draws.begin(), draws.end(), rng);
    const ProbabilityTable b = probability_table(synth::fit_from_draws(m, {flatten(draws)}));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      CHECK(a.rows[r].p_i == doctest::Approx(b.rows[r].p_i).epsilon(1e-12));
      CHECK(a.rows[r].p_j == doctest::Approx(b.rows[r].p_j).epsilon(1e-12));
    }
  }
  SUBCASE("per-draw probabilities always sum to one") {
    auto ds = synth::davidson_dataset({0.4, -0.1, -0.3}, -0.4, 60, 79);
    CompiledModel m = build_model(ds, ModelSpec::parse("davidson"));
    std::mt19937_64 rng(80);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> chain;
    for (int d = 0; d < 40; ++d)
      for (std::size_t k = 0; k < m.dimension(); ++k) chain.push_back(unif(rng));
    PosteriorFit fit = synth::fit_from_draws(m, {chain});
    for (std::size_t c = 0; c < fit.num_chains(); ++c)
      for (std::size_t d = 0; d < fit.draws_per_chain(); ++d) {
        const auto p = pair_probabilities(fit.info, fit.layout, fit.unconstrained_draw(c, d), 0, 1);
        CHECK(std::abs(p.p_i + p.p_j + p.p_tie - 1.0) < 1e-12);
      }
    const ProbabilityTable table = probability_table(fit);
    CHECK(table.has_tie_column);
    for (const auto& r : table.rows) CHECK(r.p_i + r.p_j + r.p_tie == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("predict") {
  SUBCASE("identical abilities give one half") {
    PosteriorFit fit = three_player_fit({{0.2, 0.2, -1.0, 0.4, 0.4, 0.0}});
    PredictRequest req;
    req.player0 = "A";
    req.player1 = "B";
    const auto rows = predict(fit, {req}, 0, 9);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].p_player0 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rows[0].p_player1 == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("deterministic given fit and seed") {
    PosteriorFit fit = three_player_fit(
        {{0.5, 0.1, -0.6, 0.4, 0.0, -0.4, 0.6, 0.2, -0.8, 0.3, -0.1, -0.2}});
    PredictRequest req;
    req.player0 = "A";
    req.player1 = "C";
    const auto a = predict(fit, {req}, 3, 42);
    const auto b = predict(fit, {req}, 3, 42);
    CHECK(a[0].p_player0 == b[0].p_player0);
    CHECK(a[0].freq_player0 == b[0].freq_player0);
    CHECK(a[0].draws_used == 3);
  }
  SUBCASE("unknown player rejected") {
    PosteriorFit fit = three_player_fit({{0, 0, 0}});
    PredictRequest req;
    req.player0 = "A";
    req.player1 = "Zeta";
    try {
      predict(fit, {req}, 0, 1);
      FAIL("expected UnknownPlayer");
    } catch (const Error& e) {
      CHECK(e.code() == Status::UnknownPlayer);
    }
  }
  SUBCASE("covariate shift moves the probability with the coefficient sign") {
    auto ds = synth::subject_predictor_dataset({0.0, 0.0}, {0.8, -0.8}, 40, 30, 81);
    CompiledModel m = build_model(ds, ModelSpec::parse("bt-S"));
    SamplerConfig cfg;
    cfg.chains = 2;
    cfg.warmup = 300;
    cfg.draws = 400;
    cfg.seed = 19;
    PosteriorFit fit = sample(m, cfg);

    // positive covariate boosts P1's ability, depresses P2's
    PredictRequest base;
    base.player0 = "P1";
    base.player1 = "P2";
    base.covariates = {0.0};
    PredictRequest shifted = base;
    shifted.covariates = {2.0};
    const auto rows = predict(fit, {base, shifted}, 0, 3, /*standardized=*/true);
    CHECK(rows[1].p_player0 > rows[0].p_player0);

    // missing covariates are rejected
    PredictRequest missing;
    missing.player0 = "P1";
    missing.player1 = "P2";
    try {
      predict(fit, {missing}, 0, 3);
      FAIL("expected MissingCovariate");
    } catch (const Error& e) {
      CHECK(e.code() == Status::MissingCovariate);
    }
  }
}

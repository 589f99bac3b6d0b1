#include "core/data.hpp"

#include <algorithm>
#include <unordered_map>

namespace bpc {

int ContestDataset::tie_count() const {
  int n = 0;
  for (const auto& c : contests)
    if (c.outcome == OutcomeKind::Tie) ++n;
  return n;
}

void ContestDataset::validate() const {
  const int np = num_players();
  const int ns = num_subjects();
  for (std::size_t i = 0; i < contests.size(); ++i) {
    const Contest& c = contests[i];
    if (c.player0 < 0 || c.player0 >= np || c.player1 < 0 || c.player1 >= np)
      fail(Status::Internal, "contest " + std::to_string(i) + " references an unregistered player");
    if (c.player0 == c.player1)
      fail(Status::ParseError, "contest " + std::to_string(i) + " pits a player against itself");
    if (c.subject >= ns)
      fail(Status::Internal, "contest " + std::to_string(i) + " references an unregistered subject");
    if (c.order_indicator != 0 && c.order_indicator != 1)
      fail(Status::ParseError, "contest " + std::to_string(i) + " has order indicator outside {0,1}");
    if (c.covariates.size() != covariate_names.size())
      fail(Status::Internal, "contest " + std::to_string(i) + " covariate count mismatch");
  }
  if (!player_covariate_names.empty() &&
      player_covariates.size() != player_covariate_names.size() * players.size())
    fail(Status::Internal, "player covariate table shape mismatch");
}

namespace {
int intern(std::vector<std::string>& registry, const std::string& name) {
  auto it = std::find(registry.begin(), registry.end(), name);
  if (it != registry.end()) return static_cast<int>(it - registry.begin());
  registry.push_back(name);
  return static_cast<int>(registry.size()) - 1;
}
}  // namespace

int DatasetBuilder::intern_player(const std::string& name) { return intern(ds_.players, name); }
int DatasetBuilder::intern_subject(const std::string& name) { return intern(ds_.subjects, name); }

void DatasetBuilder::set_covariate_names(std::vector<std::string> names) {
  ds_.covariate_names = std::move(names);
}

void DatasetBuilder::set_player_covariates(std::vector<std::string> names, std::vector<double> table) {
  ds_.player_covariate_names = std::move(names);
  ds_.player_covariates = std::move(table);
}

void DatasetBuilder::add_contest(const std::string& player0, const std::string& player1,
                                 OutcomeKind outcome, const std::optional<std::string>& subject,
                                 int order_indicator, std::vector<double> covariates) {
  if (player0 == player1)
    fail(Status::ParseError, "contest pits player '" + player0 + "' against itself");
  Contest c;
  c.player0 = intern_player(player0);
  c.player1 = intern_player(player1);
  c.outcome = outcome;
  if (subject) c.subject = intern_subject(*subject);
  c.order_indicator = order_indicator;
  c.covariates = std::move(covariates);
  ds_.contests.push_back(std::move(c));
}

ContestDataset DatasetBuilder::finish(std::string fingerprint) {
  ds_.fingerprint = std::move(fingerprint);
  ds_.validate();
  return std::move(ds_);
}

}  // namespace bpc

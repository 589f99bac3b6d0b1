#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace bpc {

enum class OutcomeKind : int { Player0Wins = 0, Player1Wins = 1, Tie = 2 };

struct Contest {
  int player0 = -1;  // index into ContestDataset::players
  int player1 = -1;
  OutcomeKind outcome = OutcomeKind::Player0Wins;
  int subject = -1;              // index into subjects, -1 when absent
  int order_indicator = 1;       // z in {0,1}; 1 = order effect applies to this row
  std::vector<double> covariates;  // raw per-row values, one per covariate_names entry
};

// Contests plus the player/subject registries they index into.  Player
// covariates (used by generalized models) are a per-player table; subject
// covariates ride on the contest rows.
struct ContestDataset {
  std::vector<std::string> players;   // deduplicated, first-appearance order
  std::vector<std::string> subjects;  // deduplicated, first-appearance order
  std::vector<std::string> covariate_names;         // per-row (subject) covariates
  std::vector<std::string> player_covariate_names;  // per-player covariates
  std::vector<double> player_covariates;            // players x player_covariate_names, row-major, raw
  std::vector<Contest> contests;
  std::string fingerprint;  // content hash of the source file; empty for in-memory data

  int num_players() const { return static_cast<int>(players.size()); }
  int num_subjects() const { return static_cast<int>(subjects.size()); }
  std::size_t num_contests() const { return contests.size(); }
  int tie_count() const;
  bool has_ties() const { return tie_count() > 0; }
  double player_covariate(int player, int k) const {
    return player_covariates[static_cast<std::size_t>(player) * player_covariate_names.size() + k];
  }

  // Consistency checks over registries and indices; throws on violation.
  void validate() const;
};

// Incremental construction with name interning, used by the CSV loader and by
// tests that build datasets in memory.
class DatasetBuilder {
 public:
  int intern_player(const std::string& name);
  int intern_subject(const std::string& name);
  void set_covariate_names(std::vector<std::string> names);
  void set_player_covariates(std::vector<std::string> names, std::vector<double> table);

  void add_contest(const std::string& player0, const std::string& player1, OutcomeKind outcome,
                   const std::optional<std::string>& subject = std::nullopt,
                   int order_indicator = 1, std::vector<double> covariates = {});

  ContestDataset finish(std::string fingerprint = {});

 private:
  ContestDataset ds_;
};

}  // namespace bpc

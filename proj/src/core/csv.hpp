#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/data.hpp"

namespace bpc {

enum class TieStrategy : int { None = 0, Random = 1, Remove = 2 };

TieStrategy parse_tie_strategy(const std::string& s);
const char* tie_strategy_name(TieStrategy t);

// Column mapping and tie handling for delimiter-separated contest files.
// Either result_col or the score0/score1 pair selects the outcome source.
struct IngestSpec {
  std::string path;
  std::string player0_col;
  std::string player1_col;
  std::string result_col;
  std::string score0_col, score1_col;
  std::string subject_col;
  std::string order_col;
  std::vector<std::string> covariate_cols;  // per-row (subject) covariates
  std::string player_cov_path;              // optional per-player covariate table
  std::vector<std::string> player_cov_cols;  // empty = every non-key column of that table
  TieStrategy solve_ties = TieStrategy::None;
  std::uint64_t tie_seed = 0;
  char delimiter = ',';
};

// Minimal strict CSV: header row, optional RFC-style double quotes, no
// embedded newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 when absent
  int require_column(const std::string& name, const std::string& what) const;
};

CsvTable read_csv(const std::string& path, char delimiter = ',');
CsvTable parse_csv(const std::string& content, char delimiter, const std::string& origin);

// 64-bit FNV-1a over the raw file bytes, hex-encoded.
std::string file_fingerprint(const std::string& path);
std::string content_fingerprint(const std::string& bytes);

ContestDataset load_dataset(const IngestSpec& spec);
ContestDataset load_dataset(const IngestSpec& spec, const std::string& override_path);

}  // namespace bpc

#include "core/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/rng.hpp"

namespace bpc {

TieStrategy parse_tie_strategy(const std::string& s) {
  if (s == "none") return TieStrategy::None;
  if (s == "random") return TieStrategy::Random;
  if (s == "remove") return TieStrategy::Remove;
  fail(Status::InvalidArgument, "unknown tie strategy '" + s + "'; valid: none, random, remove");
}

const char* tie_strategy_name(TieStrategy t) {
  switch (t) {
    case TieStrategy::None: return "none";
    case TieStrategy::Random: return "random";
    case TieStrategy::Remove: return "remove";
  }
  return "none";
}

int CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

int CsvTable::require_column(const std::string& name, const std::string& what) const {
  const int c = column(name);
  if (c < 0) fail(Status::MissingColumn, what + " column '" + name + "' not found in header");
  return c;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_record(const std::string& line, char delim, std::size_t line_no,
                                      const std::string& origin) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted)
    fail(Status::ParseError, origin + ": unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& field, const std::string& what, std::size_t line_no,
                    const std::string& origin) {
  if (field.empty())
    fail(Status::ParseError, origin + ": empty " + what + " on line " + std::to_string(line_no));
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size())
    fail(Status::ParseError, origin + ": cannot parse " + what + " '" + field + "' on line " +
                                 std::to_string(line_no));
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& content, char delimiter, const std::string& origin) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (pos > content.size()) break;
      continue;
    }
    auto fields = split_record(line, delimiter, line_no, origin);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        fail(Status::ParseError, origin + ": line " + std::to_string(line_no) + " has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) fail(Status::ParseError, origin + ": no header row");
  return table;
}

CsvTable read_csv(const std::string& path, char delimiter) {
  return parse_csv(read_file(path), delimiter, path);
}

std::string content_fingerprint(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string file_fingerprint(const std::string& path) {
  return content_fingerprint(read_file(path));
}

namespace {

// Per-player covariate table: first column holds the player name, every other
// column (or the selected subset) is a predictor.
std::pair<std::vector<std::string>, std::vector<double>> load_player_covariates(
    const std::vector<std::string>& players, const IngestSpec& spec) {
  CsvTable table = read_csv(spec.player_cov_path, spec.delimiter);
  if (table.header.size() < 2)
    fail(Status::MissingColumn,
         spec.player_cov_path + ": player covariate table needs a key column plus predictors");
  std::vector<int> cols;
  std::vector<std::string> names;
  if (spec.player_cov_cols.empty()) {
    for (std::size_t c = 1; c < table.header.size(); ++c) {
      cols.push_back(static_cast<int>(c));
      names.push_back(table.header[c]);
    }
  } else {
    for (const auto& name : spec.player_cov_cols) {
      cols.push_back(table.require_column(name, "player covariate"));
      names.push_back(name);
    }
  }
  std::vector<double> values(players.size() * names.size(),
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& who = table.rows[r][0];
    auto it = std::find(players.begin(), players.end(), who);
    if (it == players.end()) continue;  // extra rows are allowed
    const std::size_t p = static_cast<std::size_t>(it - players.begin());
    for (std::size_t k = 0; k < cols.size(); ++k)
      values[p * names.size() + k] =
          parse_number(table.rows[r][cols[k]], "player covariate '" + names[k] + "'", r + 2,
                       spec.player_cov_path);
  }
  for (std::size_t p = 0; p < players.size(); ++p)
    for (std::size_t k = 0; k < names.size(); ++k)
      if (std::isnan(values[p * names.size() + k]))
        fail(Status::MissingColumn, "player '" + players[p] + "' has no row in the covariate table " +
                                        spec.player_cov_path);
  return {std::move(names), std::move(values)};
}

}  // namespace

ContestDataset load_dataset(const IngestSpec& spec) { return load_dataset(spec, spec.path); }

ContestDataset load_dataset(const IngestSpec& spec, const std::string& override_path) {
  const std::string& path = override_path;
  const std::string content = read_file(path);
  // the fingerprint covers everything the model sees, including the player
  // covariate table when one is attached
  const std::string fingerprint =
      spec.player_cov_path.empty()
          ? content_fingerprint(content)
          : content_fingerprint(content + read_file(spec.player_cov_path));
  CsvTable table = parse_csv(content, spec.delimiter, path);

  const int c_p0 = table.require_column(spec.player0_col, "player0");
  const int c_p1 = table.require_column(spec.player1_col, "player1");
  const bool scored = !spec.score0_col.empty() || !spec.score1_col.empty();
  int c_result = -1, c_s0 = -1, c_s1 = -1;
  if (scored) {
    if (!spec.result_col.empty())
      fail(Status::InvalidArgument, "give either a result column or score columns, not both");
    if (spec.score0_col.empty() || spec.score1_col.empty())
      fail(Status::InvalidArgument, "score ingestion needs both score columns");
    c_s0 = table.require_column(spec.score0_col, "score0");
    c_s1 = table.require_column(spec.score1_col, "score1");
  } else {
    if (spec.result_col.empty())
      fail(Status::InvalidArgument, "a result column (or score columns) is required");
    c_result = table.require_column(spec.result_col, "result");
  }
  const int c_subject = spec.subject_col.empty()
                            ? -1
                            : table.require_column(spec.subject_col, "subject");
  const int c_order = spec.order_col.empty() ? -1 : table.require_column(spec.order_col, "order");
  std::vector<int> c_cov;
  for (const auto& name : spec.covariate_cols)
    c_cov.push_back(table.require_column(name, "covariate"));

  if (table.rows.empty()) fail(Status::ParseError, path + ": no data rows");

  DatasetBuilder builder;
  builder.set_covariate_names(spec.covariate_cols);
  Rng tie_rng(spec.tie_seed);
  std::size_t kept = 0;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line_no = r + 2;  // header is line 1

    int result;
    if (scored) {
      const double s0 = parse_number(row[c_s0], "score0", line_no, path);
      const double s1 = parse_number(row[c_s1], "score1", line_no, path);
      result = s1 > s0 ? 1 : (s0 > s1 ? 0 : 2);
    } else {
      const double raw = parse_number(row[c_result], "result", line_no, path);
      if (raw != 0.0 && raw != 1.0 && raw != 2.0)
        fail(Status::BadResultValue, path + ": result value '" + row[c_result] + "' on line " +
                                         std::to_string(line_no) +
                                         " is outside {0, 1, 2}");
      result = static_cast<int>(raw);
    }

    OutcomeKind outcome;
    if (result == 2) {
      switch (spec.solve_ties) {
        case TieStrategy::Remove: continue;
        case TieStrategy::Random:
          outcome = tie_rng.flip() ? OutcomeKind::Player1Wins : OutcomeKind::Player0Wins;
          break;
        case TieStrategy::None: outcome = OutcomeKind::Tie; break;
        default: outcome = OutcomeKind::Tie; break;
      }
    } else {
      outcome = result == 1 ? OutcomeKind::Player1Wins : OutcomeKind::Player0Wins;
    }

    int z = 1;
    if (c_order >= 0) {
      const double raw = parse_number(row[c_order], "order indicator", line_no, path);
      if (raw != 0.0 && raw != 1.0)
        fail(Status::ParseError, path + ": order indicator on line " + std::to_string(line_no) +
                                     " must be 0 or 1");
      z = static_cast<int>(raw);
    }

    std::vector<double> covs;
    covs.reserve(c_cov.size());
    for (std::size_t k = 0; k < c_cov.size(); ++k)
      covs.push_back(
          parse_number(row[c_cov[k]], "covariate '" + spec.covariate_cols[k] + "'", line_no, path));

    std::optional<std::string> subject;
    if (c_subject >= 0) subject = row[c_subject];
    if (row[c_p0].empty() || row[c_p1].empty())
      fail(Status::ParseError, path + ": empty player name on line " + std::to_string(line_no));
    builder.add_contest(row[c_p0], row[c_p1], outcome, subject, z, std::move(covs));
    ++kept;
  }

  if (kept == 0) {
    if (spec.solve_ties == TieStrategy::Remove)
      fail(Status::EmptyAfterTieRemoval, path + ": every row was a tie and ties were removed");
    fail(Status::ParseError, path + ": no usable data rows");
  }

  ContestDataset ds = builder.finish(fingerprint);
  if (!spec.player_cov_path.empty()) {
    auto [names, values] = load_player_covariates(ds.players, spec);
    ds.player_covariate_names = std::move(names);
    ds.player_covariates = std::move(values);
    ds.validate();
  }
  return ds;
}

}  // namespace bpc

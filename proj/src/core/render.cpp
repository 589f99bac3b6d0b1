#include "core/render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace bpc {

using nlohmann::json;

OutputFormat parse_format(const std::string& s) {
  if (s == "text") return OutputFormat::Text;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  fail(Status::InvalidArgument, "unknown format '" + s + "'; valid: text, csv, json");
}

namespace {

std::string fmt_fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// up to `digits` decimals, trailing zeros dropped (rank medians print as
// integers unless the median falls between ranks)
std::string fmt_trim(double v, int digits) {
  if (std::isnan(v)) return "NA";
  std::string s = fmt_fixed(v, digits);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

std::string fmt_sig(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Column {
  std::string header;
  bool left = false;
  std::size_t min_content = 0;  // content width floor (dash count = width)
};

// Pandoc-style simple table: per-column width = max(header, cells, floor) + 1,
// two-space separators, dashes under the headers.
std::string format_table(const std::vector<Column>& cols,
                         const std::vector<std::vector<std::string>>& rows) {
  const std::size_t nc = cols.size();
  std::vector<std::size_t> width(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t w = std::max(cols[c].header.size(), cols[c].min_content);
    for (const auto& row : rows) w = std::max(w, row[c].size());
    width[c] = w + 1;
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < nc; ++c) {
      if (c) line += "  ";
      const std::string& cell = cells[c];
      if (cols[c].left) {
        line += cell;
        line.append(width[c] - cell.size(), ' ');
      } else {
        line.append(width[c] - cell.size(), ' ');
        line += cell;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  };
  std::vector<std::string> headers;
  for (const auto& c : cols) headers.push_back(c.header);
  emit(headers);
  std::string dashes;
  for (std::size_t c = 0; c < nc; ++c) {
    if (c) dashes += "  ";
    dashes.append(width[c], '-');
  }
  out << dashes << "\n";
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += "\"\"";
    else q.push_back(ch);
  }
  q += "\"";
  return q;
}

std::string interval_label(IntervalKind kind, bool upper) {
  if (kind == IntervalKind::Hpd) return upper ? "HPD_higher" : "HPD_lower";
  return upper ? "ET_higher" : "ET_lower";
}

}  // namespace

std::string render_parameters(const ParameterTable& table, const TableOptions& opts) {
  if (opts.format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "parameter,mean,median," << (table.kind == IntervalKind::Hpd ? "hpd_lower,hpd_higher" : "et_lower,et_higher")
        << ",ess\n";
    for (const auto& r : table.rows)
      out << csv_quote(r.name) << ',' << fmt_sig(r.mean) << ',' << fmt_sig(r.median) << ','
          << fmt_sig(r.lower) << ',' << fmt_sig(r.upper) << ',' << fmt_sig(r.ess) << "\n";
    return out.str();
  }
  if (opts.format == OutputFormat::Json) {
    json arr = json::array();
    for (const auto& r : table.rows)
      arr.push_back(json{{"parameter", r.name},
                         {"mean", r.mean},
                         {"median", r.median},
                         {"lower", r.lower},
                         {"upper", r.upper},
                         {"ess", std::isnan(r.ess) ? json() : json(r.ess)}});
    json root{{"interval", table.kind == IntervalKind::Hpd ? "hpd" : "equal-tailed"},
              {"mass", table.mass},
              {"parameters", arr}};
    return root.dump(2) + "\n";
  }
  std::vector<Column> cols{{"Parameter", true, 18},
                           {"Mean", false, 5},
                           {"Median", false, 6},
                           {interval_label(table.kind, false), false, 9},
                           {interval_label(table.kind, true), false, 10},
                           {"ESS", false, 3}};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows)
    rows.push_back({r.name, fmt_fixed(r.mean, opts.digits), fmt_fixed(r.median, opts.digits),
                    fmt_fixed(r.lower, opts.digits), fmt_fixed(r.upper, opts.digits),
                    fmt_fixed(r.ess, 0)});
  return format_table(cols, rows);
}

std::string render_probabilities(const ProbabilityTable& table, const TableOptions& opts) {
  if (opts.format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "i,j,i_beats_j,j_beats_i" << (table.has_tie_column ? ",i_ties_j" : "") << ",odds_ratio\n";
    for (const auto& r : table.rows) {
      out << csv_quote(r.i) << ',' << csv_quote(r.j) << ',' << fmt_sig(r.p_i) << ','
          << fmt_sig(r.p_j);
      if (table.has_tie_column) out << ',' << fmt_sig(r.p_tie);
      out << ',' << fmt_sig(r.odds) << "\n";
    }
    return out.str();
  }
  if (opts.format == OutputFormat::Json) {
    json arr = json::array();
    for (const auto& r : table.rows) {
      json row{{"i", r.i}, {"j", r.j}, {"i_beats_j", r.p_i}, {"j_beats_i", r.p_j},
               {"odds_ratio", r.odds}};
      if (table.has_tie_column) row["i_ties_j"] = r.p_tie;
      arr.push_back(std::move(row));
    }
    return json{{"probabilities", arr}}.dump(2) + "\n";
  }
  std::vector<Column> cols{{"i", true, 10}, {"j", true, 10}, {"i_beats_j", false, 9},
                           {"j_beats_i", false, 9}};
  if (table.has_tie_column) cols.push_back({"i_ties_j", false, 8});
  cols.push_back({"odds_ratio", false, 10});
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.i, r.j, fmt_fixed(r.p_i, opts.digits),
                                 fmt_fixed(r.p_j, opts.digits)};
    if (table.has_tie_column) row.push_back(fmt_fixed(r.p_tie, opts.digits));
    row.push_back(fmt_fixed(r.odds, opts.digits));
    rows.push_back(std::move(row));
  }
  return format_table(cols, rows);
}

std::string render_ranks(const RankSummary& ranks, const TableOptions& opts) {
  if (opts.format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "parameter,median_rank,mean_rank,std_rank\n";
    for (const auto& r : ranks.rows)
      out << csv_quote(r.player) << ',' << fmt_sig(r.median_rank) << ',' << fmt_sig(r.mean_rank)
          << ',' << fmt_sig(r.sd_rank) << "\n";
    return out.str();
  }
  if (opts.format == OutputFormat::Json) {
    json arr = json::array();
    for (const auto& r : ranks.rows)
      arr.push_back(json{{"parameter", r.player},
                         {"median_rank", r.median_rank},
                         {"mean_rank", r.mean_rank},
                         {"std_rank", r.sd_rank}});
    return json{{"ranks", arr}}.dump(2) + "\n";
  }
  std::vector<Column> cols{{"Parameter", true, 10},
                           {"MedianRank", false, 10},
                           {"MeanRank", false, 8},
                           {"StdRank", false, 7}};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : ranks.rows)
    rows.push_back({r.player, fmt_trim(r.median_rank, 1), fmt_fixed(r.mean_rank, opts.digits),
                    fmt_fixed(r.sd_rank, opts.digits)});
  return format_table(cols, rows);
}

std::string render_summary(const PosteriorFit& fit, const TableOptions& opts) {
  const ParameterTable params = summarize(fit, opts.interval, opts.mass);
  const ProbabilityTable probs = probability_table(fit);
  const RankSummary ranks = rank_distribution(fit);

  if (opts.format == OutputFormat::Json) {
    json root;
    root["model"] = fit.info.spec.model_string();
    root["parameters"] = json::parse(render_parameters(params, opts));
    root["probabilities"] = json::parse(render_probabilities(probs, opts));
    root["ranks"] = json::parse(render_ranks(ranks, opts));
    return root.dump(2) + "\n";
  }
  if (opts.format == OutputFormat::Csv) {
    // three blocks separated by blank lines
    return render_parameters(params, opts) + "\n" + render_probabilities(probs, opts) + "\n" +
           render_ranks(ranks, opts);
  }

  std::ostringstream out;
  char mass_buf[32];
  std::snprintf(mass_buf, sizeof mass_buf, "%g", opts.mass * 100.0);
  out << "Estimated baseline parameters with " << mass_buf << "% "
      << (opts.interval == IntervalKind::Hpd ? "HPD" : "equal-tailed") << " intervals\n\n";
  out << "Table: Parameters estimates\n\n";
  out << render_parameters(params, opts);
  out << "NOTES:\n* A higher lambda indicates a higher team ability\n\n";
  out << "Posterior probabilities:\n";
  out << "These probabilities are calculated from the predictive posterior distribution\n";
  out << "for all player combinations\n\n\n";
  out << "Table: Estimated posterior probabilites\n\n";
  out << render_probabilities(probs, opts);
  out << "\nRank of the players' abilities:\n";
  out << "The rank is based on the posterior rank distribution of the lambda parameter\n\n";
  out << "Table: Estimated posterior ranks\n\n";
  out << render_ranks(ranks, opts);
  return out.str();
}

std::string render_ic(const IcEstimate& est, bool loo, OutputFormat format) {
  const char* elpd_label = loo ? "elpd_loo" : "elpd_waic";
  const char* p_label = loo ? "p_loo" : "p_waic";
  const char* ic_label = loo ? "looic" : "waic";

  if (format == OutputFormat::Json) {
    json root{{"criterion", loo ? "loo" : "waic"},
              {"elpd", est.elpd},
              {"elpd_se", est.se},
              {"p_eff", est.p_eff},
              {"ic", est.ic},
              {"draws", est.draws},
              {"observations", est.observations},
              {"pointwise_elpd", est.pointwise}};
    if (loo) {
      root["pareto_k"] = json::array();
      for (double k : est.pareto_k) root["pareto_k"].push_back(std::isnan(k) ? json() : json(k));
      root["mcse"] = std::isnan(est.mcse) ? json() : json(est.mcse);
      root["smoothed"] = est.smoothed;
    }
    return root.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "statistic,estimate,se\n";
    out << elpd_label << ',' << fmt_sig(est.elpd) << ',' << fmt_sig(est.se) << "\n";
    out << p_label << ',' << fmt_sig(est.p_eff) << ',' << fmt_sig(est.p_se) << "\n";
    out << ic_label << ',' << fmt_sig(est.ic) << ',' << fmt_sig(2.0 * est.se) << "\n";
    return out.str();
  }

  char buf[128];
  std::ostringstream out;
  out << "Computed from " << est.draws << " by " << est.observations
      << " log-likelihood matrix\n\n";
  out << "          Estimate  SE\n";
  std::snprintf(buf, sizeof buf, "%-9s%9.1f%4.1f\n", elpd_label, est.elpd, est.se);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-9s%9.1f%4.1f\n", p_label, est.p_eff, est.p_se);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-9s%9.1f%4.1f\n", ic_label, est.ic, 2.0 * est.se);
  out << buf;
  if (loo) {
    out << "------\n";
    if (std::isnan(est.mcse))
      out << "Monte Carlo SE of elpd_loo is NA.\n\n";
    else {
      std::snprintf(buf, sizeof buf, "Monte Carlo SE of elpd_loo is %.1f.\n\n", est.mcse);
      out << buf;
    }
    if (!est.smoothed) {
      out << "Warning: fewer than 50 draws; Pareto smoothing disabled, raw importance "
             "ratios used.\n";
      return out.str();
    }
    std::size_t good = 0, ok = 0, bad = 0, very_bad = 0, undef = 0;
    for (double k : est.pareto_k) {
      if (std::isnan(k)) ++undef;
      else if (k < 0.5) ++good;
      else if (k <= 0.7) ++ok;
      else if (k <= 1.0) ++bad;
      else ++very_bad;
    }
    if (ok + bad + very_bad == 0 && undef == 0) {
      out << "All Pareto k estimates are good (k < 0.5).\n";
    } else {
      out << "Pareto k diagnostic values:\n";
      const double n = static_cast<double>(est.pareto_k.size());
      auto line = [&](const char* range, const char* label, std::size_t count) {
        std::snprintf(buf, sizeof buf, "%-12s %-10s %6zu  %5.1f%%\n", range, label, count,
                      100.0 * count / n);
        out << buf;
      };
      line("(-Inf, 0.5]", "(good)", good);
      line("(0.5, 0.7]", "(ok)", ok);
      line("(0.7, 1]", "(bad)", bad);
      line("(1, Inf)", "(very bad)", very_bad);
      if (undef) line("undefined", "(flagged)", undef);
    }
  }
  return out.str();
}

std::string render_compare(const std::vector<CompareRow>& rows, bool loo, OutputFormat format) {
  const char* ic_label = loo ? "looic" : "waic";
  if (format == OutputFormat::Json) {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back(json{{"model", r.name},
                         {"elpd", r.elpd},
                         {"se", r.se},
                         {"p_eff", r.p_eff},
                         {"ic", r.ic},
                         {"elpd_diff", r.elpd_diff},
                         {"se_diff", r.se_diff}});
    return json{{"criterion", loo ? "loo" : "waic"}, {"comparison", arr}}.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "model,elpd_diff,se_diff,elpd,se,p_eff," << ic_label << "\n";
    for (const auto& r : rows)
      out << csv_quote(r.name) << ',' << fmt_sig(r.elpd_diff) << ',' << fmt_sig(r.se_diff) << ','
          << fmt_sig(r.elpd) << ',' << fmt_sig(r.se) << ',' << fmt_sig(r.p_eff) << ','
          << fmt_sig(r.ic) << "\n";
    return out.str();
  }
  std::vector<Column> cols{{"Model", true, 0},   {"elpd_diff", false, 0}, {"se_diff", false, 0},
                           {"elpd", false, 0},   {"se", false, 0},        {"p_eff", false, 0},
                           {ic_label, false, 0}};
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows)
    body.push_back({r.name, fmt_fixed(r.elpd_diff, 1), fmt_fixed(r.se_diff, 1),
                    fmt_fixed(r.elpd, 1), fmt_fixed(r.se, 1), fmt_fixed(r.p_eff, 1),
                    fmt_fixed(r.ic, 1)});
  return format_table(cols, body);
}

std::string render_predict(const std::vector<PredictRow>& rows, bool has_ties,
                           const TableOptions& opts) {
  if (opts.format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "player0,player1,p_player0,p_player1" << (has_ties ? ",p_tie" : "")
        << ",freq_player0,freq_player1" << (has_ties ? ",freq_tie" : "") << ",draws\n";
    for (const auto& r : rows) {
      out << csv_quote(r.player0) << ',' << csv_quote(r.player1) << ',' << fmt_sig(r.p_player0)
          << ',' << fmt_sig(r.p_player1);
      if (has_ties) out << ',' << fmt_sig(r.p_tie);
      out << ',' << fmt_sig(r.freq_player0) << ',' << fmt_sig(r.freq_player1);
      if (has_ties) out << ',' << fmt_sig(r.freq_tie);
      out << ',' << r.draws_used << "\n";
    }
    return out.str();
  }
  if (opts.format == OutputFormat::Json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json row{{"player0", r.player0},       {"player1", r.player1},
               {"p_player0", r.p_player0},   {"p_player1", r.p_player1},
               {"freq_player0", r.freq_player0}, {"freq_player1", r.freq_player1},
               {"draws", r.draws_used}};
      if (has_ties) {
        row["p_tie"] = r.p_tie;
        row["freq_tie"] = r.freq_tie;
      }
      arr.push_back(std::move(row));
    }
    return json{{"predictions", arr}}.dump(2) + "\n";
  }
  std::vector<Column> cols{{"player0", true, 10}, {"player1", true, 10},
                           {"p_player0", false, 9}, {"p_player1", false, 9}};
  if (has_ties) cols.push_back({"p_tie", false, 5});
  cols.push_back({"sampled0", false, 8});
  cols.push_back({"sampled1", false, 8});
  if (has_ties) cols.push_back({"sampled_tie", false, 11});
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    std::vector<std::string> row{r.player0, r.player1, fmt_fixed(r.p_player0, opts.digits),
                                 fmt_fixed(r.p_player1, opts.digits)};
    if (has_ties) row.push_back(fmt_fixed(r.p_tie, opts.digits));
    row.push_back(fmt_fixed(r.freq_player0, opts.digits));
    row.push_back(fmt_fixed(r.freq_player1, opts.digits));
    if (has_ties) row.push_back(fmt_fixed(r.freq_tie, opts.digits));
    body.push_back(std::move(row));
  }
  return format_table(cols, body);
}

std::string render_plotdata(const PosteriorFit& fit, const std::vector<std::string>& params) {
  std::vector<int> slots;
  if (params.empty()) {
    for (std::size_t s = 0; s < fit.dimension(); ++s) slots.push_back(static_cast<int>(s));
  } else {
    for (const auto& name : params) {
      const int idx = fit.layout.index_of(name);
      if (idx < 0) fail(Status::InvalidArgument, "unknown parameter '" + name + "'");
      slots.push_back(idx);
    }
  }
  std::ostringstream out;
  out << "parameter,chain,draw,value\n";
  for (int slot : slots) {
    const auto chains = fit.constrained_parameter_chains(slot);
    for (std::size_t c = 0; c < chains.size(); ++c)
      for (std::size_t d = 0; d < chains[c].size(); ++d)
        out << csv_quote(fit.layout.slots[slot].name) << ',' << c + 1 << ',' << d + 1 << ','
            << fmt_sig(chains[c][d]) << "\n";
  }
  return out.str();
}

std::string render_diagnostics(const ConvergenceReport& report, OutputFormat format) {
  if (format == OutputFormat::Json) {
    json params = json::array();
    for (const auto& p : report.params)
      params.push_back(json{{"parameter", p.name},
                            {"rhat", std::isnan(p.rhat) ? json() : json(p.rhat)},
                            {"ess", std::isnan(p.ess) ? json() : json(p.ess)}});
    json ebfmi = json::array();
    for (double v : report.ebfmi_per_chain) ebfmi.push_back(std::isnan(v) ? json() : json(v));
    json root{{"parameters", params},
              {"ebfmi", ebfmi},
              {"divergent", report.divergent},
              {"treedepth_hits", report.treedepth_hits},
              {"total_transitions", report.total_transitions},
              {"pass", report.pass()},
              {"problems", report.problems()}};
    return root.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::ostringstream out;
    out << "parameter,rhat,ess\n";
    for (const auto& p : report.params)
      out << csv_quote(p.name) << ',' << fmt_sig(p.rhat) << ',' << fmt_sig(p.ess) << "\n";
    return out.str();
  }
  return render_convergence_report(report);
}

}  // namespace bpc

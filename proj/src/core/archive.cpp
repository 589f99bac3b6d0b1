#include "core/archive.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bpc {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'B', 'P', 'C', 'F', 'I', 'T', '1', '\0'};

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void append_f64_le(std::string& out, double d) {
  append_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

double read_f64_le(const unsigned char* p) { return std::bit_cast<double>(read_u64_le(p)); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

json spec_to_json(const ModelSpec& s) {
  return json{{"model", s.model_string()},
              {"lambda_var", s.lambda_var},
              {"nu_var", s.nu_var},
              {"gamma_var", s.gamma_var},
              {"beta_var", s.beta_var},
              {"subject_var", s.subject_var},
              {"u_var", s.u_var}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s = ModelSpec::parse(j.at("model").get<std::string>());
  s.lambda_var = j.at("lambda_var").get<double>();
  s.nu_var = j.at("nu_var").get<double>();
  s.gamma_var = j.at("gamma_var").get<double>();
  s.beta_var = j.at("beta_var").get<double>();
  s.subject_var = j.at("subject_var").get<double>();
  s.u_var = j.at("u_var").get<double>();
  return s;
}

json ingest_to_json(const IngestSpec& g) {
  return json{{"path", g.path},
              {"player0", g.player0_col},
              {"player1", g.player1_col},
              {"result", g.result_col},
              {"score0", g.score0_col},
              {"score1", g.score1_col},
              {"subject", g.subject_col},
              {"order", g.order_col},
              {"covariates", g.covariate_cols},
              {"player_cov_path", g.player_cov_path},
              {"player_cov_cols", g.player_cov_cols},
              {"solve_ties", tie_strategy_name(g.solve_ties)},
              {"tie_seed", g.tie_seed},
              {"delimiter", std::string(1, g.delimiter)}};
}

IngestSpec ingest_from_json(const json& j) {
  IngestSpec g;
  g.path = j.at("path").get<std::string>();
  g.player0_col = j.at("player0").get<std::string>();
  g.player1_col = j.at("player1").get<std::string>();
  g.result_col = j.at("result").get<std::string>();
  g.score0_col = j.at("score0").get<std::string>();
  g.score1_col = j.at("score1").get<std::string>();
  g.subject_col = j.at("subject").get<std::string>();
  g.order_col = j.at("order").get<std::string>();
  g.covariate_cols = j.at("covariates").get<std::vector<std::string>>();
  g.player_cov_path = j.at("player_cov_path").get<std::string>();
  g.player_cov_cols = j.at("player_cov_cols").get<std::vector<std::string>>();
  g.solve_ties = parse_tie_strategy(j.at("solve_ties").get<std::string>());
  g.tie_seed = j.at("tie_seed").get<std::uint64_t>();
  const std::string d = j.at("delimiter").get<std::string>();
  g.delimiter = d.empty() ? ',' : d[0];
  return g;
}

json config_to_json(const SamplerConfig& c) {
  return json{{"chains", c.chains},
              {"warmup", c.warmup},
              {"draws", c.draws},
              {"target_accept", c.target_accept},
              {"max_treedepth", c.max_treedepth},
              {"seed", c.seed},
              {"init_radius", c.init_radius},
              {"init_step_size", c.init_step_size},
              {"step_size_scale", c.step_size_scale}};
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  c.chains = j.at("chains").get<int>();
  c.warmup = j.at("warmup").get<int>();
  c.draws = j.at("draws").get<int>();
  c.target_accept = j.at("target_accept").get<double>();
  c.max_treedepth = j.at("max_treedepth").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init_radius = j.at("init_radius").get<double>();
  c.init_step_size = j.at("init_step_size").get<double>();
  c.step_size_scale = j.at("step_size_scale").get<double>();
  return c;
}

void write_atomically(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Status::IoError, "cannot open '" + tmp + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Status::IoError, "short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail(Status::IoError, "cannot move '" + tmp + "' into place");
}

}  // namespace

void save_fit_with_version(const PosteriorFit& fit, const std::string& path, int version) {
  json meta;
  meta["format_version"] = version;
  meta["spec"] = spec_to_json(fit.info.spec);
  meta["players"] = fit.info.players;
  meta["subjects"] = fit.info.subjects;
  meta["player_cov_names"] = fit.info.player_cov_names;
  meta["player_cov_std"] = fit.info.player_cov_std;
  meta["player_cov_mean"] = fit.info.player_cov_mean;
  meta["player_cov_sd"] = fit.info.player_cov_sd;
  meta["subject_cov_names"] = fit.info.subject_cov_names;
  meta["subject_cov_mean"] = fit.info.subject_cov_mean;
  meta["subject_cov_sd"] = fit.info.subject_cov_sd;
  meta["fingerprint"] = fit.info.data_fingerprint;
  meta["config"] = config_to_json(fit.config);
  meta["ingest"] = ingest_to_json(fit.ingest);
  meta["chains"] = fit.num_chains();
  meta["draws_per_chain"] = fit.draws_per_chain();
  meta["dimension"] = fit.dimension();
  const std::string meta_str = meta.dump();

  const std::size_t dim = fit.dimension();
  const std::size_t dpc = fit.draws_per_chain();
  std::string payload;
  payload.reserve(fit.num_chains() * (dpc * (dim + 5) + 1 + dim) * 8);
  for (const auto& chain : fit.chains) {
    for (double v : chain.draws) append_f64_le(payload, v);
    for (const auto& st : chain.stats) {
      append_f64_le(payload, st.energy);
      append_f64_le(payload, st.accept_stat);
      append_f64_le(payload, static_cast<double>(st.treedepth));
      append_f64_le(payload, static_cast<double>(st.n_leapfrog));
      append_f64_le(payload, st.divergent ? 1.0 : 0.0);
    }
    append_f64_le(payload, chain.step_size);
    for (double v : chain.inv_mass) append_f64_le(payload, v);
  }

  std::string bytes(kMagic, sizeof kMagic);
  append_u64_le(bytes, meta_str.size());
  bytes += meta_str;
  append_u64_le(bytes, payload.size());
  bytes += payload;
  append_u64_le(bytes, fnv1a(bytes));
  write_atomically(path, bytes);
}

void save_fit(const PosteriorFit& fit, const std::string& path) {
  save_fit_with_version(fit, path, kArchiveFormatVersion);
}

PosteriorFit load_fit(const std::string& path) {
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Status::IoError, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes = ss.str();
  }
  auto corrupt = [&path](const std::string& why) {
    fail(Status::CorruptArchive, path + ": " + why);
  };

  if (bytes.size() < sizeof(kMagic) + 8) corrupt("file too short for a fit archive");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt("bad magic bytes");
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = sizeof kMagic;
  const std::uint64_t meta_len = read_u64_le(base + pos);
  pos += 8;
  if (bytes.size() < pos + meta_len + 8) corrupt("truncated metadata section");
  const std::string meta_str = bytes.substr(pos, meta_len);
  pos += meta_len;
  const std::uint64_t payload_len = read_u64_le(base + pos);
  pos += 8;
  if (bytes.size() != pos + payload_len + 8) corrupt("payload size does not match the header");
  const std::size_t payload_start = pos;
  pos += payload_len;
  const std::uint64_t stored_sum = read_u64_le(base + pos);
  if (fnv1a(bytes.substr(0, pos)) != stored_sum) corrupt("checksum mismatch");

  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    corrupt(std::string("metadata is not valid JSON: ") + e.what());
  }

  PosteriorFit fit;
  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kArchiveFormatVersion)
      fail(Status::VersionMismatch, path + ": archive format version " + std::to_string(version) +
                                        " is not supported (expected " +
                                        std::to_string(kArchiveFormatVersion) + ")");
    fit.info.spec = spec_from_json(meta.at("spec"));
    fit.info.players = meta.at("players").get<std::vector<std::string>>();
    fit.info.subjects = meta.at("subjects").get<std::vector<std::string>>();
    fit.info.player_cov_names = meta.at("player_cov_names").get<std::vector<std::string>>();
    fit.info.player_cov_std = meta.at("player_cov_std").get<std::vector<double>>();
    fit.info.player_cov_mean = meta.at("player_cov_mean").get<std::vector<double>>();
    fit.info.player_cov_sd = meta.at("player_cov_sd").get<std::vector<double>>();
    fit.info.subject_cov_names = meta.at("subject_cov_names").get<std::vector<std::string>>();
    fit.info.subject_cov_mean = meta.at("subject_cov_mean").get<std::vector<double>>();
    fit.info.subject_cov_sd = meta.at("subject_cov_sd").get<std::vector<double>>();
    fit.info.data_fingerprint = meta.at("fingerprint").get<std::string>();
    fit.config = config_from_json(meta.at("config"));
    fit.ingest = ingest_from_json(meta.at("ingest"));

    const std::size_t n_chains = meta.at("chains").get<std::size_t>();
    const std::size_t dpc = meta.at("draws_per_chain").get<std::size_t>();
    const std::size_t dim = meta.at("dimension").get<std::size_t>();

    fit.layout = build_layout(fit.info.spec, static_cast<int>(fit.info.players.size()),
                              static_cast<int>(fit.info.subjects.size()), fit.info.players,
                              fit.info.subjects, fit.info.player_cov_names,
                              fit.info.subject_cov_names);
    if (fit.layout.dimension() != dim) corrupt("layout dimension does not match the metadata");

    const std::size_t per_chain = dpc * (dim + 5) + 1 + dim;
    if (payload_len != n_chains * per_chain * 8) corrupt("draw block size mismatch");

    const unsigned char* p = base + payload_start;
    fit.chains.resize(n_chains);
    for (auto& chain : fit.chains) {
      chain.draws.resize(dpc * dim);
      for (auto& v : chain.draws) {
        v = read_f64_le(p);
        p += 8;
      }
      chain.stats.resize(dpc);
      for (auto& st : chain.stats) {
        st.energy = read_f64_le(p);
        p += 8;
        st.accept_stat = read_f64_le(p);
        p += 8;
        st.treedepth = static_cast<int>(read_f64_le(p));
        p += 8;
        st.n_leapfrog = static_cast<int>(read_f64_le(p));
        p += 8;
        st.divergent = read_f64_le(p) != 0.0;
        p += 8;
        if (st.divergent) ++chain.divergent_count;
        if (st.treedepth >= fit.config.max_treedepth) ++chain.treedepth_hit_count;
      }
      chain.step_size = read_f64_le(p);
      p += 8;
      chain.inv_mass.resize(dim);
      for (auto& v : chain.inv_mass) {
        v = read_f64_le(p);
        p += 8;
      }
    }
  } catch (const json::exception& e) {
    corrupt(std::string("metadata field missing or mistyped: ") + e.what());
  }
  return fit;
}

ContestDataset load_fit_dataset(const PosteriorFit& fit, const std::string& data_path) {
  ContestDataset ds = load_dataset(fit.ingest, data_path);
  if (ds.fingerprint != fit.info.data_fingerprint)
    fail(Status::DataFingerprintMismatch,
         data_path + ": content fingerprint " + ds.fingerprint +
             " does not match the fit's dataset fingerprint " + fit.info.data_fingerprint);
  return ds;
}

}  // namespace bpc

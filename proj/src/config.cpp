#include "fairsin/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "fairsin/error.hpp"
#include "fairsin/tsv.hpp"

namespace fairsin {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> words(const std::string& v) {
  std::istringstream in(v);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<double> to_reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& w : words(v)) out.push_back(to_real(key, w));
  return out;
}

std::vector<std::uint64_t> to_uints(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& w : words(v)) out.push_back(to_uint(key, w));
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + fmt(xs[i]);
  return out;
}

std::string from_reals(const std::vector<double>& xs) { return join(xs, tsv::format_real); }
std::string from_uints(const std::vector<std::uint64_t>& xs) {
  return join(xs, [](std::uint64_t v) { return std::to_string(v); });
}

struct Field {
  std::string key;  // "section.name"
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define FS_STRING(KEY, MEMBER) \
  Field{KEY, [](const RunConfig& c) { return c.MEMBER; }, [](RunConfig& c, const std::string& v) { c.MEMBER = trim(v); }}
#define FS_REAL(KEY, MEMBER)                                                      \
  Field{KEY, [](const RunConfig& c) { return tsv::format_real(c.MEMBER); },      \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_real(KEY, v); }}
#define FS_UINT(KEY, MEMBER)                                                      \
  Field{KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },        \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_uint(KEY, v); }}
#define FS_BOOL(KEY, MEMBER)                                                      \
  Field{KEY, [](const RunConfig& c) { return from_bool(c.MEMBER); },             \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_bool(KEY, v); }}
#define FS_REALS(KEY, MEMBER)                                                     \
  Field{KEY, [](const RunConfig& c) { return from_reals(c.MEMBER); },            \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_reals(KEY, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      FS_STRING("data.nodes", nodes_path),
      FS_STRING("data.edges", edges_path),
      FS_STRING("data.split", split_path),
      FS_REAL("data.train_ratio", split_ratios.train),
      FS_REAL("data.val_ratio", split_ratios.val),
      FS_REAL("data.test_ratio", split_ratios.test),
      FS_UINT("data.split_seed", split_seed),
      FS_UINT("synth.n_nodes", synth.n_nodes),
      FS_UINT("synth.feature_dim", synth.feature_dim),
      FS_REAL("synth.group_prior", synth.group_prior),
      FS_REALS("synth.mu0", synth.mu0),
      FS_REALS("synth.mu1", synth.mu1),
      FS_REAL("synth.group_shift", synth.group_shift),
      FS_REAL("synth.feature_sigma", synth.feature_sigma),
      FS_REAL("synth.avg_degree", synth.avg_degree),
      FS_REAL("synth.p_same", synth.p_same),
      Field{"synth.label_rule", [](const RunConfig& c) { return to_string(c.synth.label_rule); },
            [](RunConfig& c, const std::string& v) { c.synth.label_rule = parse_label_rule(trim(v)); }},
      FS_REAL("synth.rho", synth.rho),
      FS_UINT("synth.label_feature", synth.label_feature),
      FS_REAL("synth.label_threshold", synth.label_threshold),
      FS_UINT("synth.seed", synth.seed),
      Field{"encoder.kind", [](const RunConfig& c) { return to_string(c.encoder.kind); },
            [](RunConfig& c, const std::string& v) { c.encoder.kind = parse_encoder_kind(trim(v)); }},
      FS_UINT("encoder.layers", encoder.n_layers),
      FS_UINT("encoder.hidden", encoder.hidden_dim),
      FS_REAL("encoder.dropout", encoder.dropout_p),
      Field{"train.variant", [](const RunConfig& c) { return to_string(c.train.neutralize.variant); },
            [](RunConfig& c, const std::string& v) { c.train.neutralize.variant = parse_variant(trim(v)); }},
      FS_REAL("train.delta", train.neutralize.delta),
      FS_REALS("train.per_layer_delta", train.neutralize.per_layer_delta),
      FS_UINT("train.epochs", train.epochs),
      FS_REAL("train.lr_encoder", train.lr_encoder),
      FS_REAL("train.lr_estimator", train.lr_estimator),
      FS_REAL("train.lr_discriminator", train.lr_discriminator),
      FS_REAL("train.weight_decay", train.weight_decay),
      FS_REAL("train.weight_decay_estimator", train.weight_decay_estimator),
      FS_REAL("train.weight_decay_discriminator", train.weight_decay_discriminator),
      FS_REAL("train.adv_weight", train.adv_weight),
      FS_BOOL("train.no_neutral", train.no_neutral),
      FS_BOOL("train.no_discri", train.no_discri),
      FS_UINT("train.estimator_epochs", train.estimator_fit.epochs),
      FS_REAL("train.estimator_lr", train.estimator_fit.adam.lr),
      Field{"run.seeds", [](const RunConfig& c) { return from_uints(c.seeds); },
            [](RunConfig& c, const std::string& v) { c.seeds = to_uints("run.seeds", v); }},
      FS_STRING("run.output_dir", output_dir),
      FS_REAL("probe.train_frac", probe.train_frac),
      FS_UINT("probe.iterations", probe.iterations),
      FS_REAL("probe.lr", probe.lr),
      FS_REAL("probe.l2", probe.l2),
      FS_UINT("probe.seed", probe.seed),
      FS_REAL("probe.delta", probe_delta),
      FS_REALS("sweep.deltas", sweep_deltas),
  };
  return table;
}

#undef FS_STRING
#undef FS_REAL
#undef FS_UINT
#undef FS_BOOL
#undef FS_REALS

const Field& find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_ptree(RunConfig& cfg, const boost::property_tree::ptree& pt) {
  for (const auto& [section, body] : pt) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' is outside a section");
    for (const auto& [name, value] : body) find_field(section + "." + name).set(cfg, value.data());
  }
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (nodes_path.empty() != edges_path.empty()) throw ConfigError("data.nodes and data.edges must be set together");
  if (nodes_path.empty()) synth.validate();
  if (!split_path.empty() && nodes_path.empty()) throw ConfigError("data.split requires data.nodes");
  encoder.validate();
  train.validate(encoder.n_layers);
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  const std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("run.seeds must be distinct");
  if (sweep_deltas.empty()) throw ConfigError("sweep.deltas must not be empty");
  for (double d : sweep_deltas)
    if (!(d >= 0.0)) throw ConfigError("sweep.deltas must be >= 0");
  if (!(probe_delta >= 0.0)) throw ConfigError("probe.delta must be >= 0");
}

RunConfig parse_config(const std::string& ini_text) {
  boost::property_tree::ptree pt;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig cfg;
  apply_ptree(cfg, pt);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like section.key=value");
  find_field(trim(assignment.substr(0, eq))).set(cfg, assignment.substr(eq + 1));
}

std::string dump_config(const RunConfig& cfg) {
  std::string out, section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig copy = cfg;
  copy.output_dir.clear();
  return sha256_hex(dump_config(copy)).substr(0, 16);
}

}  // namespace fairsin

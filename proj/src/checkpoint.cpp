// Text checkpoint container, one record per line, fields separated by spaces:
//
//   FAIRSIN-CHECKPOINT 1
//   seed <u64>
//   config_hash <hex | ->
//   epoch <n>
//   val_acc <real>
//   test <acc> <f1> <dp> <eo>
//   encoder <gcn|gin|sage> <n_layers> <hidden_dim> <dropout_p>
//   in_dim <n>
//   neutralize <variant> <delta> <no_neutral> <no_discri> <m> <delta_0> ... <delta_m-1>
//   store <encoder|estimators|discriminator> <n_tensors>
//   tensor <name> <rows> <cols>
//   <rows*cols reals, row-major>
//   end
//
// Reals use the shortest round-trip decimal form, so load(save(c)) is bit-exact.
// Optimizer moments are not stored.

#include <fstream>
#include <string>
#include <vector>

#include "fairsin/error.hpp"
#include "fairsin/trainer.hpp"
#include "fairsin/tsv.hpp"

namespace fairsin {

namespace {

constexpr const char* kMagic = "FAIRSIN-CHECKPOINT";
constexpr int kVersion = 1;

void write_store(std::ostream& out, const char* role, const ParamStore& store) {
  out << "store " << role << ' ' << store.size() << '\n';
  for (const auto& [name, p] : store) {
    out << "tensor " << name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    const auto& d = p.value.data();
    for (std::size_t i = 0; i < d.size(); ++i) out << (i ? " " : "") << tsv::format_real(d[i]);
    out << '\n';
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  // Next non-blank line split into fields; the first field must equal key when given.
  const std::vector<std::string_view>& next(const char* key, std::size_t min_fields) {
    while (std::getline(in_, line_)) {
      ++lineno_;
      if (tsv::is_blank(line_)) continue;
      tsv::split_fields(line_, fields_);
      if (key != nullptr && fields_.front() != key)
        throw ParseError(path_, lineno_, "expected '" + std::string(key) + "' record");
      if (fields_.size() < min_fields) throw ParseError(path_, lineno_, "too few fields");
      return fields_;
    }
    throw ParseError(path_, lineno_, "unexpected end of checkpoint");
  }
  std::size_t index(std::size_t f) const { return tsv::parse_index(fields_.at(f), path_, lineno_); }
  double real(std::size_t f) const { return tsv::parse_real(fields_.at(f), path_, lineno_); }
  bool flag(std::size_t f) const {
    const std::size_t v = index(f);
    if (v > 1) throw ParseError(path_, lineno_, "flag must be 0 or 1");
    return v == 1;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, lineno_, what); }

 private:
  std::istream& in_;
  std::string path_;
  std::string line_;
  std::size_t lineno_ = 0;
  std::vector<std::string_view> fields_;
};

ParamStore read_store(Reader& r, const char* role) {
  const auto& head = r.next("store", 3);
  if (head[1] != role) r.fail("expected store '" + std::string(role) + "'");
  const std::size_t count = r.index(2);
  ParamStore store;
  for (std::size_t t = 0; t < count; ++t) {
    const auto& th = r.next("tensor", 4);
    const std::string name(th[1]);
    const std::size_t rows = r.index(2), cols = r.index(3);
    Parameter& p = store.add(name, rows, cols);
    if (rows * cols == 0) continue;
    const auto& vals = r.next(nullptr, 1);
    if (vals.size() != rows * cols) r.fail("tensor " + name + " has the wrong number of values");
    for (std::size_t i = 0; i < vals.size(); ++i) p.value.data()[i] = r.real(i);
  }
  return store;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << "seed " << c.seed << '\n';
  out << "config_hash " << (c.config_hash.empty() ? "-" : c.config_hash) << '\n';
  out << "epoch " << c.epoch << '\n';
  out << "val_acc " << tsv::format_real(c.val_acc) << '\n';
  out << "test " << tsv::format_real(c.test.acc) << ' ' << tsv::format_real(c.test.f1) << ' '
      << tsv::format_real(c.test.dp) << ' ' << tsv::format_real(c.test.eo) << '\n';
  out << "encoder " << to_string(c.encoder.kind) << ' ' << c.encoder.n_layers << ' '
      << c.encoder.hidden_dim << ' ' << tsv::format_real(c.encoder.dropout_p) << '\n';
  out << "in_dim " << c.in_dim << '\n';
  out << "neutralize " << to_string(c.neutralize.variant) << ' ' << tsv::format_real(c.neutralize.delta)
      << ' ' << int(c.no_neutral) << ' ' << int(c.no_discri) << ' ' << c.neutralize.per_layer_delta.size();
  for (double d : c.neutralize.per_layer_delta) out << ' ' << tsv::format_real(d);
  out << '\n';
  write_store(out, "encoder", c.encoder_params);
  write_store(out, "estimators", c.estimator_params);
  write_store(out, "discriminator", c.discriminator_params);
  out << "end\n";
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Reader r(in, path.string());
  Checkpoint c;

  r.next(kMagic, 2);
  if (r.index(1) != static_cast<std::size_t>(kVersion)) r.fail("unsupported checkpoint version");
  r.next("seed", 2);
  c.seed = r.index(1);
  const auto& hash = r.next("config_hash", 2);
  if (hash[1] != "-") c.config_hash = std::string(hash[1]);
  r.next("epoch", 2);
  c.epoch = r.index(1);
  r.next("val_acc", 2);
  c.val_acc = r.real(1);
  r.next("test", 5);
  c.test = {c.seed, r.real(1), r.real(2), r.real(3), r.real(4)};
  const auto& enc = r.next("encoder", 5);
  try {
    c.encoder.kind = parse_encoder_kind(std::string(enc[1]));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  c.encoder.n_layers = r.index(2);
  c.encoder.hidden_dim = r.index(3);
  c.encoder.dropout_p = r.real(4);
  r.next("in_dim", 2);
  c.in_dim = r.index(1);
  const auto& nz = r.next("neutralize", 6);
  try {
    c.neutralize.variant = parse_variant(std::string(nz[1]));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  c.neutralize.delta = r.real(2);
  c.no_neutral = r.flag(3);
  c.no_discri = r.flag(4);
  const std::size_t m = r.index(5);
  if (nz.size() != 6 + m) r.fail("per-layer delta count mismatch");
  for (std::size_t i = 0; i < m; ++i) c.neutralize.per_layer_delta.push_back(r.real(6 + i));
  c.encoder_params = read_store(r, "encoder");
  c.estimator_params = read_store(r, "estimators");
  c.discriminator_params = read_store(r, "discriminator");
  r.next("end", 1);
  return c;
}

}  // namespace fairsin

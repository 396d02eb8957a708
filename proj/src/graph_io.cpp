#include <charconv>
#include <fstream>
#include <sstream>

#include "fairsin/error.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/tsv.hpp"

namespace fairsin {

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace

Graph load_dataset(const std::filesystem::path& nodes_path,
                   const std::filesystem::path& edges_path) {
  const std::string npath = nodes_path.string();
  auto nin = open_in(nodes_path);
  std::string line;
  std::size_t lineno = 0;

  std::vector<std::string_view> cols;
  std::string header;
  while (std::getline(nin, header)) {
    ++lineno;
    if (!tsv::is_blank(header)) break;
  }
  tsv::split_fields(header, cols);
  if (cols.size() < 3 || cols[0] != "id" || cols[1] != "sensitive" || cols[2] != "label")
    throw ParseError(npath, lineno, "expected header 'id sensitive label f0 ...'");
  const std::size_t d = cols.size() - 3;
  for (std::size_t f = 0; f < d; ++f)
    if (cols[3 + f] != "f" + std::to_string(f))
      throw ParseError(npath, lineno, "feature column " + std::to_string(f) + " must be named f" + std::to_string(f));

  struct Row {
    std::size_t id;
    long sensitive;
    long label;
    bool has_label;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  while (std::getline(nin, line)) {
    ++lineno;
    if (tsv::is_blank(line)) continue;
    tsv::split_fields(line, cols);
    if (cols.size() != d + 3)
      throw ParseError(npath, lineno, "expected " + std::to_string(d + 3) + " fields, got " + std::to_string(cols.size()));
    Row r;
    r.id = tsv::parse_index(cols[0], npath, lineno);
    r.sensitive = tsv::parse_int(cols[1], npath, lineno);
    r.has_label = cols[2] != "-";
    r.label = r.has_label ? tsv::parse_int(cols[2], npath, lineno) : 0;
    if (r.sensitive != 0 && r.sensitive != 1)
      throw ValidationError(npath + ":" + std::to_string(lineno) + ": sensitive value must be 0 or 1");
    if (r.has_label && r.label != 0 && r.label != 1)
      throw ValidationError(npath + ":" + std::to_string(lineno) + ": label must be 0, 1 or '-'");
    r.x.resize(d);
    for (std::size_t f = 0; f < d; ++f) r.x[f] = tsv::parse_real(cols[3 + f], npath, lineno);
    rows.push_back(std::move(r));
  }

  const std::size_t n = rows.size();
  Matrix features(n, d);
  std::vector<int> sensitive(n), labels(n, 0);
  std::vector<bool> mask(n, false), seen(n, false);
  for (const Row& r : rows) {
    if (r.id >= n) throw ValidationError(npath + ": node ids must be exactly 0.." + std::to_string(n - 1));
    if (seen[r.id]) throw ValidationError(npath + ": duplicate node id " + std::to_string(r.id));
    seen[r.id] = true;
    sensitive[r.id] = static_cast<int>(r.sensitive);
    labels[r.id] = static_cast<int>(r.label);
    mask[r.id] = r.has_label;
    std::copy(r.x.begin(), r.x.end(), features.row(r.id).begin());
  }

  const std::string epath = edges_path.string();
  auto ein = open_in(edges_path);
  lineno = 0;
  std::vector<Edge> edges;
  bool header_seen = false;
  while (std::getline(ein, line)) {
    ++lineno;
    if (tsv::is_blank(line)) continue;
    tsv::split_fields(line, cols);
    if (!header_seen && !cols.empty() && cols[0] == "src") {
      header_seen = true;
      if (cols.size() < 2 || cols.size() > 3 || cols[1] != "dst" || (cols.size() == 3 && cols[2] != "weight"))
        throw ParseError(epath, lineno, "expected header 'src dst [weight]'");
      continue;
    }
    header_seen = true;
    if (cols.size() != 2 && cols.size() != 3)
      throw ParseError(epath, lineno, "expected 'src dst [weight]', got " + std::to_string(cols.size()) + " fields");
    Edge e;
    e.src = tsv::parse_index(cols[0], epath, lineno);
    e.dst = tsv::parse_index(cols[1], epath, lineno);
    e.weight = cols.size() == 3 ? tsv::parse_real(cols[2], epath, lineno) : 1.0;
    edges.push_back(e);
  }
  return Graph::from_edges(n, edges, std::move(features), std::move(sensitive), std::move(labels),
                           std::move(mask));
}

void write_dataset(const Graph& g, const std::filesystem::path& nodes_path,
                   const std::filesystem::path& edges_path) {
  {
    auto out = open_out(nodes_path);
    out << "id\tsensitive\tlabel";
    for (std::size_t f = 0; f < g.n_features(); ++f) out << "\tf" << f;
    out << '\n';
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      out << i << '\t' << g.sensitive()[i] << '\t';
      if (g.label_mask()[i]) {
        out << g.labels()[i];
      } else {
        out << '-';
      }
      for (double v : g.features().row(i)) out << '\t' << tsv::format_real(v);
      out << '\n';
    }
  }
  auto out = open_out(edges_path);
  out << "src\tdst\tweight\n";
  for (const Edge& e : g.undirected_edges())
    out << e.src << '\t' << e.dst << '\t' << tsv::format_real(e.weight) << '\n';
}

Split load_split(const std::filesystem::path& path, std::size_t n_nodes) {
  const std::string p = path.string();
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string_view> cols;
  Split split;
  while (std::getline(in, line)) {
    ++lineno;
    if (tsv::is_blank(line)) continue;
    tsv::split_fields(line, cols);
    if (cols.size() != 2) throw ParseError(p, lineno, "expected 'id part'");
    if (cols[0] == "id") continue;
    const std::size_t id = tsv::parse_index(cols[0], p, lineno);
    if (id >= n_nodes) throw ValidationError(p + ":" + std::to_string(lineno) + ": node id out of range");
    if (cols[1] == "train") {
      split.train_idx.push_back(id);
    } else if (cols[1] == "val") {
      split.val_idx.push_back(id);
    } else if (cols[1] == "test") {
      split.test_idx.push_back(id);
    } else {
      throw ParseError(p, lineno, "part must be train, val or test");
    }
  }
  for (auto* part : {&split.train_idx, &split.val_idx, &split.test_idx}) std::sort(part->begin(), part->end());
  return split;
}

void write_split(const Split& split, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id\tpart\n";
  for (std::size_t i : split.train_idx) out << i << "\ttrain\n";
  for (std::size_t i : split.val_idx) out << i << "\tval\n";
  for (std::size_t i : split.test_idx) out << i << "\ttest\n";
}

}  // namespace fairsin

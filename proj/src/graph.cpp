#include "fairsin/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairsin/error.hpp"

namespace fairsin {

Graph::Graph(std::vector<std::size_t> offsets, std::vector<std::size_t> targets,
             std::vector<double> weights, Matrix features, std::vector<int> sensitive,
             std::vector<int> labels, std::vector<bool> label_mask)
    : offsets_(std::move(offsets)),
      targets_(std::move(targets)),
      weights_(std::move(weights)),
      features_(std::move(features)),
      sensitive_(std::move(sensitive)),
      labels_(std::move(labels)),
      label_mask_(std::move(label_mask)) {
  validate();
}

void Graph::validate() const {
  const std::size_t n = sensitive_.size();
  if (offsets_.size() != n + 1) throw ValidationError("csr_offsets must have n_nodes + 1 entries");
  if (offsets_.front() != 0) throw ValidationError("csr_offsets must start at 0");
  if (offsets_.back() != targets_.size()) throw ValidationError("csr_offsets[n] != len(csr_targets)");
  if (weights_.size() != targets_.size()) throw ValidationError("edge_weights not aligned with csr_targets");
  if (features_.rows() != n) throw ValidationError("feature matrix row count != n_nodes");
  if (labels_.size() != n || label_mask_.size() != n) throw ValidationError("label arrays must have n_nodes entries");
  if (!features_.all_finite()) throw ValidationError("non-finite feature value");
  for (std::size_t i = 0; i < n; ++i) {
    if (sensitive_[i] != 0 && sensitive_[i] != 1)
      throw ValidationError("sensitive attribute of node " + std::to_string(i) + " is not in {0,1}");
    if (label_mask_[i] && labels_[i] != 0 && labels_[i] != 1)
      throw ValidationError("label of node " + std::to_string(i) + " is not in {0,1}");
    if (offsets_[i] > offsets_[i + 1]) throw ValidationError("csr_offsets is not nondecreasing");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const std::size_t j = targets_[k];
      if (j >= n) throw ValidationError("edge target out of range at node " + std::to_string(i));
      if (j == i) throw ValidationError("self-loop at node " + std::to_string(i));
      if (k > offsets_[i] && targets_[k - 1] >= j)
        throw ValidationError("neighbor list of node " + std::to_string(i) + " not strictly sorted");
      if (!(weights_[k] > 0.0) || !std::isfinite(weights_[k]))
        throw ValidationError("non-positive edge weight on (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const std::size_t j = targets_[k];
      const auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[j]);
      const auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[j + 1]);
      const auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i)
        throw ValidationError("missing reverse edge (" + std::to_string(j) + "," + std::to_string(i) + ")");
      if (weights_[static_cast<std::size_t>(it - targets_.begin())] != weights_[k])
        throw ValidationError("asymmetric weight on edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
}

Graph Graph::from_edges(std::size_t n_nodes, const std::vector<Edge>& edges, Matrix features,
                        std::vector<int> sensitive, std::vector<int> labels,
                        std::vector<bool> label_mask) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.src >= n_nodes || e.dst >= n_nodes)
      throw ValidationError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ") references unknown node");
    if (e.src == e.dst) throw ValidationError("self-loop on node " + std::to_string(e.src));
    directed.push_back(e);
    directed.push_back({e.dst, e.src, e.weight});
  }
  std::sort(directed.begin(), directed.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  std::vector<std::size_t> offsets(n_nodes + 1, 0);
  std::vector<std::size_t> targets;
  std::vector<double> weights;
  for (std::size_t k = 0; k < directed.size(); ++k) {
    const Edge& e = directed[k];
    if (k > 0 && directed[k - 1].src == e.src && directed[k - 1].dst == e.dst) {
      if (directed[k - 1].weight != e.weight)
        throw ValidationError("asymmetric weight on edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
      continue;
    }
    targets.push_back(e.dst);
    weights.push_back(e.weight);
    ++offsets[e.src + 1];
  }
  for (std::size_t i = 0; i < n_nodes; ++i) offsets[i + 1] += offsets[i];
  return Graph(std::move(offsets), std::move(targets), std::move(weights), std::move(features),
               std::move(sensitive), std::move(labels), std::move(label_mask));
}

std::vector<Edge> Graph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(targets_.size() / 2);
  for (std::size_t i = 0; i < n_nodes(); ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
      if (i < targets_[k]) out.push_back({i, targets_[k], weights_[k]});
  return out;
}

SparseMatrix Graph::adjacency() const {
  return SparseMatrix(n_nodes(), n_nodes(), offsets_, targets_, weights_);
}

Graph Graph::with_features(Matrix features) const {
  return Graph(offsets_, targets_, weights_, std::move(features), sensitive_, labels_, label_mask_);
}

Graph Graph::with_weights(std::vector<double> weights) const {
  return Graph(offsets_, targets_, std::move(weights), features_, sensitive_, labels_, label_mask_);
}

bool Graph::has_both_groups() const {
  const bool any0 = std::find(sensitive_.begin(), sensitive_.end(), 0) != sensitive_.end();
  const bool any1 = std::find(sensitive_.begin(), sensitive_.end(), 1) != sensitive_.end();
  return any0 && any1;
}

NeighborStats neighbor_stats(const Graph& g) {
  NeighborStats st;
  const std::size_t n = g.n_nodes();
  st.degree.resize(n);
  st.hetero_degree.resize(n);
  const auto& s = g.sensitive();
  std::size_t deg_total = 0, het_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st.degree[i] = g.degree(i);
    std::size_t h = 0;
    for (std::size_t j : g.neighbors(i)) h += s[j] != s[i] ? 1 : 0;
    st.hetero_degree[i] = h;
    if (h == 0) ++st.n_no_hetero;
    deg_total += st.degree[i];
    het_total += h;
  }
  if (n > 0) {
    st.avg_degree = static_cast<double>(deg_total) / static_cast<double>(n);
    st.avg_hetero_degree = static_cast<double>(het_total) / static_cast<double>(n);
  }
  return st;
}

Split stratified_split(const Graph& g, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  for (double v : r)
    if (!(v > 0.0)) throw ConfigError("split ratios must be positive");
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    if (g.label_mask()[i]) by_class[static_cast<std::size_t>(g.labels()[i])].push_back(i);
  const std::size_t total = by_class[0].size() + by_class[1].size();

  std::array<std::size_t, 3> part_total{};
  part_total[0] = static_cast<std::size_t>(std::llround(r[0] * static_cast<double>(total)));
  part_total[1] = static_cast<std::size_t>(std::llround(r[1] * static_cast<double>(total)));
  if (part_total[0] + part_total[1] > total) throw ValidationError("too few labeled nodes to split");
  part_total[2] = total - part_total[0] - part_total[1];
  for (std::size_t p : part_total)
    if (p == 0) throw ValidationError("too few labeled nodes to populate train/val/test");

  // count[c][p]: nodes of class c assigned to part p.
  std::array<std::array<std::size_t, 3>, 2> count{};
  std::array<std::size_t, 2> remaining{by_class[0].size(), by_class[1].size()};
  for (std::size_t p = 0; p < 2; ++p) {
    std::array<double, 2> frac{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      const double exact = r[p] * static_cast<double>(by_class[c].size());
      count[c][p] = std::min(static_cast<std::size_t>(std::floor(exact)), remaining[c]);
      frac[c] = exact - std::floor(exact);
      assigned += count[c][p];
    }
    std::array<std::size_t, 2> order{0, 1};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    while (assigned < part_total[p]) {
      bool placed = false;
      for (std::size_t c : order) {
        if (assigned < part_total[p] && count[c][p] < remaining[c]) {
          ++count[c][p];
          ++assigned;
          placed = true;
        }
      }
      if (!placed) break;
    }
    while (assigned > part_total[p]) {
      for (std::size_t c : order)
        if (assigned > part_total[p] && count[c][p] > 0) {
          --count[c][p];
          --assigned;
        }
    }
    for (std::size_t c = 0; c < 2; ++c) remaining[c] -= count[c][p];
  }
  count[0][2] = remaining[0];
  count[1][2] = remaining[1];

  Split split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>*, 3> parts{&split.train_idx, &split.val_idx, &split.test_idx};
  for (std::size_t c = 0; c < 2; ++c) {
    auto nodes = by_class[c];
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      parts[p]->insert(parts[p]->end(), nodes.begin() + static_cast<std::ptrdiff_t>(pos),
                       nodes.begin() + static_cast<std::ptrdiff_t>(pos + count[c][p]));
      pos += count[c][p];
    }
  }
  for (auto* p : parts) {
    if (p->empty()) throw ValidationError("too few labeled nodes to populate train/val/test");
    std::sort(p->begin(), p->end());
  }
  return split;
}

void validate_split(const Graph& g, const Split& split) {
  std::vector<int> seen(g.n_nodes(), 0);
  for (const auto* part : {&split.train_idx, &split.val_idx, &split.test_idx}) {
    if (part->empty()) throw ValidationError("split part is empty");
    for (std::size_t i : *part) {
      if (i >= g.n_nodes()) throw ValidationError("split index out of range");
      if (!g.label_mask()[i]) throw ValidationError("split contains unlabeled node " + std::to_string(i));
      if (seen[i]++ != 0) throw ValidationError("split parts overlap at node " + std::to_string(i));
    }
  }
}

}  // namespace fairsin

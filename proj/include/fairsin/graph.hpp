#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsin/matrix.hpp"

namespace fairsin {

// Undirected edge as read from edges.tsv. The graph stores both directions.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 1.0;
};

/// Immutable attributed graph.
///
/// Adjacency is symmetric CSR without self-loops: every undirected edge {i,j}
/// appears as i->j and j->i with equal weight. Each node carries a feature
/// row, a binary sensitive attribute and an optional binary label.
class Graph {
 public:
  // Validates every invariant and throws ValidationError on the first breach.
  // Edges must already be symmetric; use from_edges() to symmetrize.
  Graph(std::vector<std::size_t> offsets, std::vector<std::size_t> targets,
        std::vector<double> weights, Matrix features, std::vector<int> sensitive,
        std::vector<int> labels, std::vector<bool> label_mask);

  // Builds from an undirected edge list: adds missing reverse edges, drops
  // exact duplicates, rejects self-loops and conflicting duplicate weights.
  static Graph from_edges(std::size_t n_nodes, const std::vector<Edge>& edges, Matrix features,
                          std::vector<int> sensitive, std::vector<int> labels,
                          std::vector<bool> label_mask);

  std::size_t n_nodes() const { return sensitive_.size(); }
  std::size_t n_features() const { return features_.cols(); }
  // Number of stored directed entries (2x the undirected edge count).
  std::size_t n_directed_edges() const { return targets_.size(); }

  const std::vector<std::size_t>& csr_offsets() const { return offsets_; }
  const std::vector<std::size_t>& csr_targets() const { return targets_; }
  const std::vector<double>& edge_weights() const { return weights_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& sensitive() const { return sensitive_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<bool>& label_mask() const { return label_mask_; }

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> neighbor_weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  // Each undirected edge once (src < dst), in CSR order.
  std::vector<Edge> undirected_edges() const;
  // Weighted adjacency as a sparse matrix (no self-loops).
  SparseMatrix adjacency() const;

  // Copies with one component replaced; the result is re-validated.
  Graph with_features(Matrix features) const;
  Graph with_weights(std::vector<double> weights) const;

  bool has_both_groups() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void validate() const;

  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> targets_;
  std::vector<double> weights_;
  Matrix features_;
  std::vector<int> sensitive_;
  std::vector<int> labels_;
  std::vector<bool> label_mask_;
};

struct Split {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;

  friend bool operator==(const Split&, const Split&) = default;
};

struct NeighborStats {
  std::vector<std::size_t> degree;
  std::vector<std::size_t> hetero_degree;
  double avg_degree = 0.0;
  double avg_hetero_degree = 0.0;
  std::size_t n_no_hetero = 0;
};

NeighborStats neighbor_stats(const Graph& g);

struct SplitRatios {
  double train = 0.5;
  double val = 0.25;
  double test = 0.25;
};

// Stratified by label: each part receives its share of every class, with
// leftover slots assigned by largest fractional remainder. Deterministic in seed.
Split stratified_split(const Graph& g, const SplitRatios& ratios, std::uint64_t seed);
void validate_split(const Graph& g, const Split& split);

// ---- TSV interchange --------------------------------------------------------

Graph load_dataset(const std::filesystem::path& nodes_path,
                   const std::filesystem::path& edges_path);
// Writes nodes.tsv and edges.tsv. Reals use the shortest round-trip decimal
// form, so load_dataset(write_dataset(g)) == g.
void write_dataset(const Graph& g, const std::filesystem::path& nodes_path,
                   const std::filesystem::path& edges_path);

Split load_split(const std::filesystem::path& path, std::size_t n_nodes);
void write_split(const Split& split, const std::filesystem::path& path);

}  // namespace fairsin

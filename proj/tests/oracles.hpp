#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. Everything here works on dense matrices with plain loops and never
// calls the sparse kernels it is compared against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fairsin/autodiff.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/matrix.hpp"
#include "fairsin/metrics.hpp"
#include "fairsin/optim.hpp"

namespace oracle {

using fairsin::Graph;
using fairsin::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

// Random undirected graph with both sensitive groups and both labels present.
inline Graph random_graph(std::mt19937_64& rng, std::size_t n, double p_edge, std::size_t d,
                          bool random_weights = false) {
  std::bernoulli_distribution edge(p_edge), coin(0.5);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::vector<fairsin::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) edges.push_back({i, j, random_weights ? weight(rng) : 1.0});
  std::vector<int> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = coin(rng);
    y[i] = coin(rng);
  }
  s[0] = 0, s[1] = 1, y[0] = 0, y[1] = 1;
  return Graph::from_edges(n, edges, random_matrix(rng, n, d), s, y, std::vector<bool>(n, true));
}

inline Matrix dense_adjacency(const Graph& g) {
  Matrix a(g.n_nodes(), g.n_nodes());
  for (const auto& e : g.undirected_edges()) {
    a(e.src, e.dst) = e.weight;
    a(e.dst, e.src) = e.weight;
  }
  return a;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// D^-1/2 (A + I) D^-1/2 built entry by entry.
inline Matrix dense_normalized_adjacency(const Graph& g) {
  const std::size_t n = g.n_nodes();
  Matrix a = dense_adjacency(g);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

// Mean over every j with A_ij != 0 and s_j != s_i; zero row when there is none.
inline Matrix dense_hetero_mean(const Graph& g, const Matrix& h, std::vector<bool>* has = nullptr) {
  const Matrix a = dense_adjacency(g);
  Matrix out(h.rows(), h.cols());
  if (has) has->assign(h.rows(), false);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    double count = 0.0;
    for (std::size_t j = 0; j < h.rows(); ++j) {
      if (a(i, j) == 0.0 || g.sensitive()[j] == g.sensitive()[i]) continue;
      count += 1.0;
      for (std::size_t c = 0; c < h.cols(); ++c) out(i, c) += h(j, c);
    }
    if (count > 0.0) {
      if (has) (*has)[i] = true;
      for (std::size_t c = 0; c < h.cols(); ++c) out(i, c) /= count;
    }
  }
  return out;
}

struct Confusion {
  double acc, f1, dp, eo;
};

// Filters explicit sub-lists per group instead of counting in one pass.
inline Confusion brute_force_metrics(const fairsin::Predictions& p) {
  std::vector<std::size_t> g0, g1, pos0, pos1;
  double correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i : p.eval_idx) {
    correct += p.y_hat[i] == p.y_true[i];
    tp += p.y_hat[i] == 1 && p.y_true[i] == 1;
    fp += p.y_hat[i] == 1 && p.y_true[i] == 0;
    fn += p.y_hat[i] == 0 && p.y_true[i] == 1;
    (p.sensitive[i] ? g1 : g0).push_back(i);
    if (p.y_true[i] == 1) (p.sensitive[i] ? pos1 : pos0).push_back(i);
  }
  auto rate = [&](const std::vector<std::size_t>& ids) {
    double k = 0;
    for (std::size_t i : ids) k += p.y_hat[i] == 1;
    return k / static_cast<double>(ids.size());
  };
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  return {correct / static_cast<double>(p.eval_idx.size()), f1, std::abs(rate(g0) - rate(g1)),
          std::abs(rate(pos0) - rate(pos1))};
}

// Moves every parameter off its initial value. Zero biases otherwise leave
// ReLU inputs exactly on the kink, where central differences are meaningless.
inline void jitter(fairsin::ParamStore& store, std::mt19937_64& rng, double scale = 0.1) {
  std::normal_distribution<double> d(0.0, scale);
  for (auto& [name, p] : store)
    for (double& v : p.value.data()) v += d(rng);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t n_checked = 0;
  double worst_numeric = 0.0;  // the pair behind max_rel_error
  double worst_analytic = 0.0;
};

// Five-point central differences over every scalar of `store`. The fourth
// order stencil keeps truncation error negligible at a step of 1e-5, where
// cancellation error is about 1e-11 relative to the loss. A second estimate
// at h / 10 detects non-differentiable points inside the wider window. `loss` must build the objective on the given
// tape, binding `store` as trainable.
inline GradCheck check_gradients(fairsin::ParamStore& store,
                                 const std::function<fairsin::ad::Var(fairsin::ad::Tape&)>& loss,
                                 double h = 1e-5) {
  store.zero_grad();
  {
    fairsin::ad::Tape tape;
    tape.backward(loss(tape));
  }
  auto value = [&] {
    fairsin::ad::Tape tape;
    return loss(tape).value()(0, 0);
  };
  GradCheck out;
  for (auto& [name, p] : store) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double& w = p.value.data()[i];
      const double saved = w;
      auto at = [&](double step) {
        w = saved + step;
        return value();
      };
      auto stencil = [&](double step) {
        return (at(-2 * step) - 8 * at(-step) + 8 * at(step) - at(2 * step)) / (12 * step);
      };
      const double wide = stencil(h), narrow = stencil(h / 10);
      w = saved;
      // On smooth stretches the two agree to cancellation error; a larger gap
      // means a ReLU kink lies inside the wide window.
      const double numeric = std::abs(wide - narrow) <= 1e-9 + 1e-6 * std::abs(wide) ? wide : narrow;
      const double analytic = p.grad.data()[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_numeric = numeric;
        out.worst_analytic = analytic;
      }
      ++out.n_checked;
    }
  }
  return out;
}

}  // namespace oracle

#include "fairsin/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fairsin/error.hpp"

namespace fairsin::ad {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

Tape& tape_of(Var a, Var b) {
  require(a.tape != nullptr && a.tape == b.tape, "operands live on different tapes");
  return *a.tape;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, std::uint64_t seed) {
  Matrix mask(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = u(rng) >= p ? keep_scale : 0.0;
  return mask;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

Var Tape::constant(Matrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p, bool trainable) {
  Node n;
  n.op = "parameter:" + p.name;
  n.value = p.value;
  n.param = trainable ? &p : nullptr;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, std::vector<std::size_t> inputs, ForwardFn forward,
                 BackwardFn backward) {
  Node n;
  n.op = op;
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].requires_grad; });
  n.value = forward(*this);
  n.inputs = std::move(inputs);
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty() && n.value.size() != 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate(std::size_t id, Matrix&& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty() && n.value.size() != 0) {
    n.grad = std::move(g);
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  require(root.tape == this, "backward: root belongs to another tape");
  const Matrix& rv = nodes_[root.id].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ShapeError("backward: root must be a scalar, got " + std::to_string(rv.rows()) + "x" +
                     std::to_string(rv.cols()));
  }
  for (Node& n : nodes_) n.grad = Matrix();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad = Matrix::scalar(1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) {
      // The closure only writes into the grads of earlier nodes, so n.grad can
      // be lent out and restored.
      Matrix g = std::move(n.grad);
      n.backward(*this, g);
      n.grad = std::move(g);
    }
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

double Tape::replay_max_deviation() const {
  double dev = 0.0;
  for (const Node& n : nodes_) {
    if (!n.forward) continue;
    dev = std::max(dev, max_abs_diff(n.forward(*this), n.value));
  }
  return dev;
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(
      "matmul", {ia, ib},
      [ia, ib](const Tape& tp) { return fairsin::matmul(tp.value(ia), tp.value(ib)); },
      [ia, ib](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ia)) tp.accumulate(ia, matmul_nt(g, tp.value(ib)));
        if (tp.requires_grad(ib)) tp.accumulate(ib, matmul_tn(tp.value(ia), g));
      });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.value().same_shape(b.value()), "add: shape mismatch");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(
      "add", {ia, ib}, [ia, ib](const Tape& tp) { return tp.value(ia) + tp.value(ib); },
      [ia, ib](Tape& tp, const Matrix& g) {
        tp.accumulate(ia, g);
        tp.accumulate(ib, g);
      });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.value().same_shape(b.value()), "sub: shape mismatch");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(
      "sub", {ia, ib}, [ia, ib](const Tape& tp) { return tp.value(ia) - tp.value(ib); },
      [ia, ib](Tape& tp, const Matrix& g) {
        tp.accumulate(ia, g);
        if (tp.requires_grad(ib)) tp.accumulate(ib, g * -1.0);
      });
}

Var add_row(Var a, Var bias) {
  Tape& t = tape_of(a, bias);
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row: bias must be 1 x cols");
  const std::size_t ia = a.id, ib = bias.id;
  return t.record(
      "add_row", {ia, ib},
      [ia, ib](const Tape& tp) {
        Matrix out = tp.value(ia);
        const auto b = tp.value(ib).row(0);
        for (std::size_t r = 0; r < out.rows(); ++r) {
          auto row = out.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
        }
        return out;
      },
      [ia, ib](Tape& tp, const Matrix& g) {
        tp.accumulate(ia, g);
        if (tp.requires_grad(ib)) {
          Matrix gb(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
          tp.accumulate(ib, std::move(gb));
        }
      });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id;
  return a.tape->record(
      "scale", {ia}, [ia, s](const Tape& tp) { return tp.value(ia) * s; },
      [ia, s](Tape& tp, const Matrix& g) { tp.accumulate(ia, g * s); });
}

Var relu(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(
      "relu", {ia},
      [ia](const Tape& tp) {
        Matrix out = tp.value(ia);
        for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
        return out;
      },
      [ia](Tape& tp, const Matrix& g) {
        Matrix gi = g;
        const auto& x = tp.value(ia).data();
        for (std::size_t i = 0; i < gi.size(); ++i)
          if (!(x[i] > 0.0)) gi.data()[i] = 0.0;
        tp.accumulate(ia, std::move(gi));
      });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(
      "sigmoid", {ia},
      [ia](const Tape& tp) {
        Matrix out = tp.value(ia);
        for (double& v : out.data()) v = sigmoid_scalar(v);
        return out;
      },
      [ia](Tape& tp, const Matrix& g) {
        Matrix gi = g;
        const auto& x = tp.value(ia).data();
        for (std::size_t i = 0; i < gi.size(); ++i) {
          const double y = sigmoid_scalar(x[i]);
          gi.data()[i] *= y * (1.0 - y);
        }
        tp.accumulate(ia, std::move(gi));
      });
}

Var dropout(Var a, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: p must lie in [0, 1)");
  if (p == 0.0) return a;
  const std::size_t ia = a.id;
  auto mask = std::make_shared<const Matrix>(dropout_mask(a.rows(), a.cols(), p, seed));
  return a.tape->record(
      "dropout", {ia}, [ia, mask](const Tape& tp) { return hadamard(tp.value(ia), *mask); },
      [ia, mask](Tape& tp, const Matrix& g) { tp.accumulate(ia, hadamard(g, *mask)); });
}

Var row_softmax(Var a) {
  const std::size_t ia = a.id;
  auto forward = [ia](const Tape& tp) {
    Matrix out = tp.value(ia);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (double& v : row) {
        v = std::exp(v - mx);
        z += v;
      }
      for (double& v : row) v /= z;
    }
    return out;
  };
  return a.tape->record("row_softmax", {ia}, forward, [ia, forward](Tape& tp, const Matrix& g) {
    const Matrix y = forward(tp);
    Matrix gi(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gi(r, c) = y(r, c) * (g(r, c) - dot);
    }
    tp.accumulate(ia, std::move(gi));
  });
}

Var concat(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require(a.rows() == b.rows(), "concat: row mismatch");
  const std::size_t ia = a.id, ib = b.id;
  const std::size_t ca = a.cols();
  return t.record(
      "concat", {ia, ib}, [ia, ib](const Tape& tp) { return hconcat(tp.value(ia), tp.value(ib)); },
      [ia, ib, ca](Tape& tp, const Matrix& g) {
        const std::size_t cb = g.cols() - ca;
        Matrix ga(g.rows(), ca), gb(g.rows(), cb);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < ca; ++c) ga(r, c) = g(r, c);
          for (std::size_t c = 0; c < cb; ++c) gb(r, c) = g(r, ca + c);
        }
        tp.accumulate(ia, std::move(ga));
        tp.accumulate(ib, std::move(gb));
      });
}

Var spmm(std::shared_ptr<const SparseMatrix> a, Var b) {
  require(a != nullptr, "spmm: null sparse operand");
  require(a->cols() == b.rows(), "spmm: inner dimension mismatch");
  const std::size_t ib = b.id;
  return b.tape->record(
      "spmm", {ib}, [a, ib](const Tape& tp) { return fairsin::spmm(*a, tp.value(ib)); },
      [a, ib](Tape& tp, const Matrix& g) { tp.accumulate(ib, spmm_tn(*a, g)); });
}

Var sum(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(
      "sum", {ia},
      [ia](const Tape& tp) {
        double s = 0.0;
        for (double v : tp.value(ia).data()) s += v;
        return Matrix::scalar(s);
      },
      [ia](Tape& tp, const Matrix& g) {
        const Matrix& x = tp.value(ia);
        tp.accumulate(ia, Matrix(x.rows(), x.cols(), g(0, 0)));
      });
}

Var detach(Var a) { return a.tape->constant(a.value()); }

Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::size_t> idx) {
  if (idx.empty()) throw ValidationError("softmax_cross_entropy: empty mask");
  require(labels.size() == logits.rows(), "softmax_cross_entropy: label count mismatch");
  const std::size_t il = logits.id;
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  const std::size_t classes = logits.cols();
  for (std::size_t r : rows) {
    require(r < lab.size(), "softmax_cross_entropy: index out of range");
    require(lab[r] >= 0 && static_cast<std::size_t>(lab[r]) < classes,
            "softmax_cross_entropy: label out of range");
  }
  auto forward = [il, lab, rows](const Tape& tp) {
    const Matrix& z = tp.value(il);
    double total = 0.0;
    for (std::size_t r : rows) {
      const auto row = z.row(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double v : row) s += std::exp(v - mx);
      total += (mx + std::log(s)) - row[static_cast<std::size_t>(lab[r])];
    }
    return Matrix::scalar(total / static_cast<double>(rows.size()));
  };
  return logits.tape->record(
      "softmax_cross_entropy", {il}, forward, [il, lab, rows](Tape& tp, const Matrix& g) {
        const Matrix& z = tp.value(il);
        Matrix gz(z.rows(), z.cols());
        const double w = g(0, 0) / static_cast<double>(rows.size());
        for (std::size_t r : rows) {
          const auto row = z.row(r);
          const double mx = *std::max_element(row.begin(), row.end());
          double s = 0.0;
          for (double v : row) s += std::exp(v - mx);
          for (std::size_t c = 0; c < row.size(); ++c) {
            const double p = std::exp(row[c] - mx) / s;
            gz(r, c) += w * (p - (static_cast<int>(c) == lab[r] ? 1.0 : 0.0));
          }
        }
        tp.accumulate(il, std::move(gz));
      });
}

Var binary_cross_entropy(Var logits, std::span<const int> targets,
                         std::span<const std::size_t> idx) {
  require(logits.cols() == 1, "binary_cross_entropy: logits must be n x 1");
  require(targets.size() == logits.rows(), "binary_cross_entropy: target count mismatch");
  if (idx.empty()) return logits.tape->constant(Matrix::scalar(0.0));
  const std::size_t il = logits.id;
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  for (std::size_t r : rows) require(r < tgt.size(), "binary_cross_entropy: index out of range");
  auto forward = [il, tgt, rows](const Tape& tp) {
    const Matrix& z = tp.value(il);
    double total = 0.0;
    for (std::size_t r : rows) {
      // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
      total += softplus(z(r, 0)) - (tgt[r] != 0 ? z(r, 0) : 0.0);
    }
    return Matrix::scalar(total / static_cast<double>(rows.size()));
  };
  return logits.tape->record(
      "binary_cross_entropy", {il}, forward, [il, tgt, rows](Tape& tp, const Matrix& g) {
        const Matrix& z = tp.value(il);
        Matrix gz(z.rows(), 1);
        const double w = g(0, 0) / static_cast<double>(rows.size());
        for (std::size_t r : rows) gz(r, 0) += w * (sigmoid_scalar(z(r, 0)) - (tgt[r] != 0 ? 1.0 : 0.0));
        tp.accumulate(il, std::move(gz));
      });
}

Var mse_masked(Var pred, const Matrix& target, std::span<const std::size_t> idx) {
  if (idx.empty()) throw ValidationError("mse_masked: empty mask");
  require(pred.value().same_shape(target), "mse_masked: shape mismatch");
  const std::size_t ip = pred.id;
  auto tgt = std::make_shared<const Matrix>(target);
  std::vector<std::size_t> rows(idx.begin(), idx.end());
  for (std::size_t r : rows) require(r < target.rows(), "mse_masked: index out of range");
  const double denom = static_cast<double>(rows.size() * target.cols());
  auto forward = [ip, tgt, rows, denom](const Tape& tp) {
    const Matrix& p = tp.value(ip);
    double total = 0.0;
    for (std::size_t r : rows) {
      const auto pr = p.row(r);
      const auto tr = tgt->row(r);
      for (std::size_t c = 0; c < pr.size(); ++c) {
        const double d = pr[c] - tr[c];
        total += d * d;
      }
    }
    return Matrix::scalar(total / denom);
  };
  return pred.tape->record(
      "mse_masked", {ip}, forward, [ip, tgt, rows, denom](Tape& tp, const Matrix& g) {
        const Matrix& p = tp.value(ip);
        Matrix gp(p.rows(), p.cols());
        const double w = 2.0 * g(0, 0) / denom;
        for (std::size_t r : rows)
          for (std::size_t c = 0; c < p.cols(); ++c) gp(r, c) += w * (p(r, c) - (*tgt)(r, c));
        tp.accumulate(ip, std::move(gp));
      });
}

}  // namespace fairsin::ad

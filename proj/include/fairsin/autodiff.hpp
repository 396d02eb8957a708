#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairsin/matrix.hpp"
#include "fairsin/optim.hpp"

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every primitive applied during a forward pass. Each node keeps
// its value, a forward closure (used to replay the record) and a backward
// closure that pushes the node's gradient into its inputs. Nodes that do not
// depend on a trainable leaf are marked constant and skipped by backward().
namespace fairsin::ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  using ForwardFn = std::function<Matrix(const Tape&)>;
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a Parameter. When trainable, backward() adds into p.grad.
  Var parameter(Parameter& p, bool trainable = true);

  // Records a derived node. requires_grad is inherited from the inputs.
  Var record(const char* op, std::vector<std::size_t> inputs, ForwardFn forward,
             BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  // Gradient of the last backward() root; empty matrix when never reached.
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::string& op(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  // Adds g into the gradient buffer of node id (no-op for constant nodes).
  void accumulate(std::size_t id, const Matrix& g);
  void accumulate(std::size_t id, Matrix&& g);

  // Back-propagates from a 1x1 root and adds leaf gradients into their
  // Parameters. Node gradients from a previous call are discarded first.
  void backward(Var root);

  // Recomputes every derived node from its recorded inputs and returns the
  // largest absolute deviation from the stored values.
  double replay_max_deviation() const;

 private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    ForwardFn forward;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Adds a 1xC row vector to every row of a.
Var add_row(Var a, Var bias);
Var scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
// Inverted dropout: kept entries are divided by 1-p. The mask is a pure
// function of seed, so identical seeds give identical masks. p == 0 returns a.
Var dropout(Var a, double p, std::uint64_t seed);
Var row_softmax(Var a);
Var concat(Var a, Var b);
// Sparse-dense product; differentiable with respect to the dense operand.
Var spmm(std::shared_ptr<const SparseMatrix> a, Var b);
Var sum(Var a);
// Copies the value into a fresh constant node; gradients stop here.
Var detach(Var a);

// ---- losses (1x1 outputs) -------------------------------------------------

// Mean over idx of -log softmax(logits)[label]. Empty idx throws.
Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::size_t> idx);
// Mean over idx of BCE between sigmoid(logit) and target; logits is n x 1.
// Returns a constant zero when idx is empty.
Var binary_cross_entropy(Var logits, std::span<const int> targets,
                         std::span<const std::size_t> idx);
// Mean over the selected rows and all columns of (pred - target)^2. Empty idx throws.
Var mse_masked(Var pred, const Matrix& target, std::span<const std::size_t> idx);

}  // namespace fairsin::ad

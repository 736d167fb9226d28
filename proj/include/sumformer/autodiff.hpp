#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sumformer/tensor.hpp"

namespace sumformer {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode differentiation over matrix-valued nodes.
//
// Nodes are appended in evaluation order, so the node list is already a
// topological order; backpropagation walks it in reverse. Parameters are
// leaves registered through parameter(); gradient() returns one adjoint per
// parameter in registration order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  using Backward = std::function<void(const Matrix& out_grad, std::vector<Matrix>& grads)>;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<std::size_t>& parameter_ids() const { return params_; }

  // Appends an op node. `backward` receives the node's adjoint and must
  // accumulate into the adjoints of the listed inputs.
  Var record(Matrix value, Backward backward);

  // d(loss)/d(parameter) for every parameter. Throws ContractError unless
  // loss is a 1x1 node of this tape.
  std::vector<Matrix> gradient(Var loss) const;

 private:
  struct Node {
    Matrix value;
    Backward backward;  // empty for leaves
  };
  std::vector<Node> nodes_;
  std::vector<std::size_t> params_;
};

inline const Matrix& Var::value() const { return tape->value(*this); }

// Differentiable ops. All operands must live on the same tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var m, Var row);  // row is 1 x cols, broadcast over rows
Var relu(Var a);              // subgradient at 0 is 0
Var square(Var a);
Var sum_all(Var a);   // 1x1
Var mean_all(Var a);  // 1x1
Var hconcat(Var a, Var b);
// Sums consecutive blocks of `group` rows: (g*m) x c -> m x c.
Var group_sum(Var a, Eigen::Index group);
// Repeats every row `group` times: m x c -> (g*m) x c.
Var group_repeat(Var a, Eigen::Index group);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace sumformer

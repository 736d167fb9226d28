#include "sumformer/autodiff.hpp"

#include <utility>

namespace sumformer {

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw ContractError("autodiff: operands live on different tapes");
  }
  return *a.tape;
}

void check_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
  }
}

void accumulate(std::vector<Matrix>& grads, std::size_t id, const Matrix& g) {
  if (grads[id].size() == 0) {
    grads[id] = g;
  } else {
    grads[id] += g;
  }
}

}  // namespace

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  Var v = constant(std::move(value));
  params_.push_back(v.id);
  return v;
}

Var Tape::record(Matrix value, Backward backward) {
  nodes_.push_back(Node{std::move(value), std::move(backward)});
  return Var{this, nodes_.size() - 1};
}

std::vector<Matrix> Tape::gradient(Var loss) const {
  if (loss.tape != this || loss.id >= nodes_.size()) {
    throw ContractError("gradient: loss does not belong to this tape");
  }
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("gradient: loss must be 1x1, got " + shape_str(lv));
  }
  std::vector<Matrix> grads(nodes_.size());
  grads[loss.id] = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (grads[i].size() == 0 || !nodes_[i].backward) continue;
    nodes_[i].backward(grads[i], grads);
  }
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (std::size_t id : params_) {
    if (grads[id].size() == 0) {
      out.push_back(Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols()));
    } else {
      out.push_back(std::move(grads[id]));
    }
  }
  return out;
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + shape_str(av) + " times " + shape_str(bv));
  }
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), [&t, ia, ib](const Matrix& g, std::vector<Matrix>& grads) {
    const Matrix& av = t.value(Var{&t, ia});
    const Matrix& bv = t.value(Var{&t, ib});
    Matrix ga(av.rows(), av.cols());
    ga.noalias() = g * bv.transpose();
    Matrix gb(bv.rows(), bv.cols());
    gb.noalias() = av.transpose() * g;
    accumulate(grads, ia, ga);
    accumulate(grads, ib, gb);
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape("add", a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() + b.value(), [ia, ib](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, ia, g);
    accumulate(grads, ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape("sub", a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() - b.value(), [ia, ib](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, ia, g);
    accumulate(grads, ib, -g);
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  check_same_shape("hadamard", a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value().cwiseProduct(b.value()),
                  [&t, ia, ib](const Matrix& g, std::vector<Matrix>& grads) {
                    accumulate(grads, ia, g.cwiseProduct(t.value(Var{&t, ib})));
                    accumulate(grads, ib, g.cwiseProduct(t.value(Var{&t, ia})));
                  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  const std::size_t ia = a.id;
  return t.record(s * a.value(), [ia, s](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, ia, s * g);
  });
}

Var add_row(Var m, Var row) {
  Tape& t = same_tape(m, row);
  const Matrix& mv = m.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != mv.cols()) {
    throw ShapeError("add_row: " + shape_str(mv) + " + " + shape_str(rv));
  }
  Matrix out = mv;
  out.rowwise() += rv.row(0);
  const std::size_t im = m.id, ir = row.id;
  return t.record(std::move(out), [im, ir](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, im, g);
    accumulate(grads, ir, column_sums(g));
  });
}

Var relu(Var a) {
  Tape& t = *a.tape;
  const std::size_t ia = a.id;
  return t.record(a.value().cwiseMax(0.0), [&t, ia](const Matrix& g, std::vector<Matrix>& grads) {
    const Matrix& x = t.value(Var{&t, ia});
    accumulate(grads, ia, Matrix((x.array() > 0.0).select(g.array(), 0.0)));
  });
}

Var square(Var a) {
  Tape& t = *a.tape;
  const std::size_t ia = a.id;
  return t.record(a.value().cwiseAbs2(), [&t, ia](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, ia, 2.0 * g.cwiseProduct(t.value(Var{&t, ia})));
  });
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  const Matrix& av = a.value();
  double total = 0.0;
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    for (Eigen::Index j = 0; j < av.cols(); ++j) total += av(i, j);
  }
  const std::size_t ia = a.id;
  const Eigen::Index r = av.rows(), c = av.cols();
  return t.record(Matrix::Constant(1, 1, total),
                  [ia, r, c](const Matrix& g, std::vector<Matrix>& grads) {
                    accumulate(grads, ia, Matrix::Constant(r, c, g(0, 0)));
                  });
}

Var mean_all(Var a) {
  const double count = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / count);
}

Var hconcat(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("hconcat: " + shape_str(av) + " | " + shape_str(bv));
  }
  Matrix out(av.rows(), av.cols() + bv.cols());
  out << av, bv;
  const std::size_t ia = a.id, ib = b.id;
  const Eigen::Index ca = av.cols(), cb = bv.cols();
  return t.record(std::move(out), [ia, ib, ca, cb](const Matrix& g, std::vector<Matrix>& grads) {
    accumulate(grads, ia, g.leftCols(ca));
    accumulate(grads, ib, g.rightCols(cb));
  });
}

Var group_sum(Var a, Eigen::Index group) {
  Tape& t = *a.tape;
  const Matrix& av = a.value();
  if (group <= 0 || av.rows() % group != 0) {
    throw ShapeError("group_sum: " + std::to_string(av.rows()) + " rows not divisible by " +
                     std::to_string(group));
  }
  const Eigen::Index blocks = av.rows() / group;
  Matrix out = Matrix::Zero(blocks, av.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (Eigen::Index r = 0; r < group; ++r) out.row(b) += av.row(b * group + r);
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, group](const Matrix& g, std::vector<Matrix>& grads) {
    Matrix ga(g.rows() * group, g.cols());
    for (Eigen::Index b = 0; b < g.rows(); ++b) {
      for (Eigen::Index r = 0; r < group; ++r) ga.row(b * group + r) = g.row(b);
    }
    accumulate(grads, ia, ga);
  });
}

Var group_repeat(Var a, Eigen::Index group) {
  Tape& t = *a.tape;
  const Matrix& av = a.value();
  if (group <= 0) throw ShapeError("group_repeat: group must be positive");
  Matrix out(av.rows() * group, av.cols());
  for (Eigen::Index b = 0; b < av.rows(); ++b) {
    for (Eigen::Index r = 0; r < group; ++r) out.row(b * group + r) = av.row(b);
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, group](const Matrix& g, std::vector<Matrix>& grads) {
    Matrix ga = Matrix::Zero(g.rows() / group, g.cols());
    for (Eigen::Index b = 0; b < ga.rows(); ++b) {
      for (Eigen::Index r = 0; r < group; ++r) ga.row(b) += g.row(b * group + r);
    }
    accumulate(grads, ia, ga);
  });
}

}  // namespace sumformer

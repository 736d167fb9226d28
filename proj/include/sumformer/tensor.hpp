#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>

#include "sumformer/errors.hpp"

namespace sumformer {

// Row-major dense matrix. Rows are tokens throughout the library.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Vector = VectorX<double>;

// Running tally of multiply-accumulate operations. Passed by pointer to the
// forward kernels that support instrumentation; nullptr disables counting.
struct MacCounter {
  std::uint64_t macs = 0;
  void add(std::uint64_t m) { macs += m; }
};

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Exact product with a fixed reduction order: every output entry is
// sum_{l=0}^{K-1} a(i,l) * b(l,j) accumulated left to right starting from 0.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b,
                                          MacCounter* counter = nullptr) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " times " + shape_str(b));
  }
  const Eigen::Index rows = a.rows();
  const Eigen::Index inner = a.cols();
  const Eigen::Index cols = b.cols();
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index l = 0; l < inner; ++l) {
      const Scalar ail = a(i, l);
      for (Eigen::Index j = 0; j < cols; ++j) {
        out(i, j) += ail * b(l, j);
      }
    }
  }
  if (counter != nullptr) {
    counter->add(static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(inner) *
                 static_cast<std::uint64_t>(cols));
  }
  return out;
}

// Row-wise softmax with max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < m.cols(); ++j) mx = std::max(mx, Scalar(m(i, j)));
    Scalar total = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(i, j) = std::exp(m(i, j) - mx);
      total += out(i, j);
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseMax(typename Derived::Scalar(0));
}

// Adds a 1 x c row vector to every row.
template <typename DerivedM, typename DerivedB>
MatrixX<typename DerivedM::Scalar> add_row(const Eigen::MatrixBase<DerivedM>& m,
                                           const Eigen::MatrixBase<DerivedB>& row) {
  if (row.rows() != 1 || row.cols() != m.cols()) {
    throw ShapeError("add_row: " + shape_str(m) + " + " + shape_str(row));
  }
  MatrixX<typename DerivedM::Scalar> out = m;
  out.rowwise() += row.row(0);
  return out;
}

// Left-to-right column sums as a 1 x c row.
template <typename Derived>
RowVectorX<typename Derived::Scalar> column_sums(const Eigen::MatrixBase<Derived>& m) {
  RowVectorX<typename Derived::Scalar> out = RowVectorX<typename Derived::Scalar>::Zero(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out += m.row(i);
  return out;
}

}  // namespace sumformer

#include "sumformer/equivariance.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

namespace sumformer {

Permutation::Permutation(std::vector<Eigen::Index> mapping) : map_(std::move(mapping)) {
  std::vector<bool> seen(map_.size(), false);
  for (Eigen::Index v : map_) {
    if (v < 0 || static_cast<std::size_t>(v) >= map_.size() || seen[static_cast<std::size_t>(v)]) {
      throw ContractError("Permutation: not a bijection: " + str());
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Permutation Permutation::identity(Eigen::Index n) {
  std::vector<Eigen::Index> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), Eigen::Index{0});
  return Permutation(std::move(m));
}

Permutation Permutation::random(Eigen::Index n, std::mt19937_64& rng) {
  std::vector<Eigen::Index> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), Eigen::Index{0});
  for (std::size_t i = m.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(m[i - 1], m[pick(rng)]);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::random_fixing_first(Eigen::Index n, std::mt19937_64& rng) {
  std::vector<Eigen::Index> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), Eigen::Index{0});
  for (std::size_t i = m.size(); i > 2; --i) {
    std::uniform_int_distribution<std::size_t> pick(1, i - 1);
    std::swap(m[i - 1], m[pick(rng)]);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<Eigen::Index> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = Eigen::Index(i);
  return Permutation(std::move(inv));
}

std::string Permutation::str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < map_.size(); ++i) os << (i ? "," : "") << map_[i];
  os << "]";
  return os.str();
}

Matrix permute(const Matrix& x, const Permutation& p) {
  if (p.size() != x.rows()) {
    throw ShapeError("permute: permutation of size " + std::to_string(p.size()) + " for " +
                     std::to_string(x.rows()) + " rows");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(p[i]);
  return out;
}

Permutation compose(const Permutation& q, const Permutation& p) {
  if (p.size() != q.size()) throw ShapeError("compose: size mismatch");
  std::vector<Eigen::Index> r(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) r[static_cast<std::size_t>(i)] = p[q[i]];
  return Permutation(std::move(r));
}

std::vector<Permutation> all_permutations(Eigen::Index n) {
  std::vector<Eigen::Index> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), Eigen::Index{0});
  std::vector<Permutation> out;
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

Matrix others(const Matrix& x, Eigen::Index i) {
  Matrix rest(x.rows() - 1, x.cols());
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j != i) rest.row(r++) = x.row(j);
  }
  return rest;
}

SequenceMap lift(SemiInvariantFn g) {
  return [g = std::move(g)](const Matrix& x) {
    Matrix out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      RowVector gi = g(x.row(i), others(x, i));
      if (i == 0) out.resize(x.rows(), gi.cols());
      if (gi.cols() != out.cols()) throw ShapeError("lift: inconsistent output width");
      out.row(i) = gi;
    }
    return out;
  };
}

SequenceToPoint as_sequence_to_point(SemiInvariantFn g) {
  return [g = std::move(g)](const Matrix& x) -> RowVector { return g(x.row(0), others(x, 0)); };
}

Matrix random_sequence(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng, double low,
                       double high) {
  std::uniform_real_distribution<double> dist(low, high);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = dist(rng);
  }
  return x;
}

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("check: output shape changed under permutation");
  }
  if (a.size() == 0) return 0.0;
  // NaN must register as a violation.
  const double m = (a - b).cwiseAbs().maxCoeff();
  return std::isnan(m) ? std::numeric_limits<double>::infinity() : m;
}

template <typename Probe>
CheckReport run_check(Eigen::Index n, Eigen::Index d, const CheckOptions& options, bool fix_first,
                      Probe&& probe) {
  CheckReport report;
  std::mt19937_64 rng(options.seed);
  std::vector<Permutation> exhaustive;
  if (n <= options.exhaustive_up_to) {
    for (auto& p : all_permutations(n)) {
      if (!fix_first || p[0] == 0) exhaustive.push_back(std::move(p));
    }
  }
  for (int t = 0; t < options.trials; ++t) {
    Matrix x = random_sequence(n, d, rng, options.low, options.high);
    auto consider = [&](const Permutation& p) {
      const double v = probe(x, p);
      ++report.evaluations;
      if (v > report.max_violation || report.witness_input.size() == 0) {
        report.max_violation = std::max(report.max_violation, v);
        report.witness_input = x;
        report.witness_permutation = p;
      }
    };
    if (!exhaustive.empty()) {
      for (const auto& p : exhaustive) consider(p);
    } else {
      consider(fix_first ? Permutation::random_fixing_first(n, rng) : Permutation::random(n, rng));
    }
  }
  report.passed = report.max_violation <= options.tol;
  return report;
}

}  // namespace

CheckReport check_equivariance(const SequenceMap& f, Eigen::Index n, Eigen::Index d,
                               const CheckOptions& options) {
  Matrix last_x;
  Matrix last_fx;
  return run_check(n, d, options, false, [&](const Matrix& x, const Permutation& p) {
    if (last_x.size() == 0 || last_x != x) {
      last_x = x;
      last_fx = f(x);
    }
    return max_abs_diff(f(permute(x, p)), permute(last_fx, p));
  });
}

CheckReport check_semi_invariance(const SequenceToPoint& g, Eigen::Index n, Eigen::Index d,
                                  const CheckOptions& options) {
  return run_check(n, d, options, true, [&](const Matrix& x, const Permutation& p) {
    return max_abs_diff(g(permute(x, p)), g(x));
  });
}

}  // namespace sumformer

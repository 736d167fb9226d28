#include "sumformer/sumformer.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sumformer {

double LatentPolynomial::evaluate(const RowVector& s) const {
  double total = 0.0;
  for (const auto& t : terms) {
    double v = t.coefficient;
    for (std::size_t j = 0; j < t.exponents.size(); ++j) {
      for (int e = 0; e < t.exponents[j]; ++e) v *= s(Eigen::Index(j));
    }
    total += v;
  }
  return total;
}

Eigen::Index SumformerModel::output_dim() const {
  if (const auto* m = std::get_if<MlpMap>(&psi)) return m->spec.output_width();
  return static_cast<Eigen::Index>(std::get<PolynomialPsi>(psi).components.size());
}

void SumformerModel::validate() const {
  if (d < 1 || d_latent < 1) throw ContractError("SumformerModel: d and d' must be positive");
  if (const auto* p = std::get_if<PolynomialPhi>(&phi)) {
    if (p->basis.d != d || p->basis.size() != d_latent) {
      throw ShapeError("SumformerModel: monomial basis does not match d / d'");
    }
  } else {
    const auto& m = std::get<MlpMap>(phi);
    check_params(m.spec, m.params);
    if (m.spec.input_width() != d || m.spec.output_width() != d_latent) {
      throw ShapeError("SumformerModel: phi network must map d -> d'");
    }
  }
  if (const auto* m = std::get_if<MlpMap>(&psi)) {
    check_params(m->spec, m->params);
    if (m->spec.input_width() != d + d_latent) {
      throw ShapeError("SumformerModel: psi network input width must be d + d'");
    }
  } else {
    for (const auto& component : std::get<PolynomialPsi>(psi).components) {
      for (const auto& term : component) {
        if (term.alpha.dim() != d) throw ShapeError("PsiTerm: multidegree length != d");
        for (const auto& mono : term.sigma.terms) {
          if (static_cast<Eigen::Index>(mono.exponents.size()) != d_latent) {
            throw ShapeError("PsiTerm: sigma arity " + std::to_string(mono.exponents.size()) +
                             " != d' = " + std::to_string(d_latent));
          }
        }
      }
    }
  }
}

Matrix phi_rows(const SumformerModel& model, const Matrix& x) {
  if (const auto* p = std::get_if<PolynomialPhi>(&model.phi)) {
    return monomial_feature_rows(x, p->basis);
  }
  const auto& m = std::get<MlpMap>(model.phi);
  return mlp_forward(m.spec, m.params, x);
}

Matrix sumformer_forward(const SumformerModel& model, const Matrix& x) {
  model.validate();
  if (x.cols() != model.d) {
    throw ShapeError("sumformer_forward: input " + shape_str(x) + " for d = " +
                     std::to_string(model.d));
  }
  const Matrix phi = phi_rows(model, x);
  const RowVector sigma = column_sums(phi);

  if (const auto* m = std::get_if<MlpMap>(&model.psi)) {
    Matrix joined(x.rows(), model.d + model.d_latent);
    joined.leftCols(model.d) = x;
    joined.rightCols(model.d_latent).rowwise() = sigma;
    return mlp_forward(m->spec, m->params, joined);
  }

  const auto& poly = std::get<PolynomialPsi>(model.psi);
  Matrix out(x.rows(), static_cast<Eigen::Index>(poly.components.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const RowVector xi = x.row(i);
    const RowVector others_sum = sigma - phi.row(i);
    for (std::size_t c = 0; c < poly.components.size(); ++c) {
      double value = 0.0;
      for (const auto& term : poly.components[c]) {
        value += monomial(xi, term.alpha) * term.sigma.evaluate(others_sum);
      }
      out(i, Eigen::Index(c)) = value;
    }
  }
  return out;
}

SumformerModel make_mlp_sumformer(Eigen::Index d, Eigen::Index d_latent, int hidden, int units,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SumformerModel model;
  model.d = d;
  model.d_latent = d_latent;
  MlpMap phi{MlpSpec::uniform(int(d), hidden, units, int(d_latent)), {}};
  phi.params = init_mlp(phi.spec, rng);
  MlpMap psi{MlpSpec::uniform(int(d + d_latent), hidden, units, int(d)), {}};
  psi.params = init_mlp(psi.spec, rng);
  model.phi = std::move(phi);
  model.psi = std::move(psi);
  model.validate();
  return model;
}

SumformerModel make_polynomial_sumformer(Eigen::Index n, Eigen::Index d, int hidden, int units,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SumformerModel model;
  model.d = d;
  PolynomialPhi phi{enumerate_multidegrees(int(d), int(n))};
  model.d_latent = phi.basis.size();
  model.phi = std::move(phi);
  MlpMap psi{MlpSpec::uniform(int(d + model.d_latent), hidden, units, int(d)), {}};
  psi.params = init_mlp(psi.spec, rng);
  model.psi = std::move(psi);
  model.validate();
  return model;
}

SumformerModel build_continuous_sumformer(Eigen::Index n, Eigen::Index d,
                                          std::vector<std::vector<PsiTerm>> components) {
  if (static_cast<Eigen::Index>(components.size()) != d) {
    throw ShapeError("build_continuous_sumformer: " + std::to_string(components.size()) +
                     " psi components for d = " + std::to_string(d));
  }
  SumformerModel model;
  model.d = d;
  PolynomialPhi phi{enumerate_multidegrees(int(d), int(n))};
  model.d_latent = phi.basis.size();
  model.phi = std::move(phi);
  model.psi = PolynomialPsi{std::move(components)};
  model.validate();
  return model;
}

DiscreteSumformer::DiscreteSumformer(int delta, Eigen::Index n, Eigen::Index d,
                                     Eigen::Index output_dim)
    : delta_(delta), n_(n), d_(d), output_dim_(output_dim), cell_count_(1) {
  if (delta < 1 || n < 1 || d < 1) throw ContractError("DiscreteSumformer: Delta, n, d >= 1");
  for (Eigen::Index i = 0; i < d; ++i) cell_count_ *= delta;
}

std::vector<int> DiscreteSumformer::quantize(const RowVector& x) const {
  if (x.cols() != d_) throw ShapeError("DiscreteSumformer: token width mismatch");
  std::vector<int> cell(static_cast<std::size_t>(d_));
  for (Eigen::Index j = 0; j < d_; ++j) {
    const double v = x(j);
    if (!(v >= 0.0 && v < 1.0)) {
      throw DomainError("DiscreteSumformer: token coordinate " + std::to_string(v) +
                        " outside [0,1)");
    }
    int c = std::min(static_cast<int>(std::floor(v * delta_)), delta_ - 1);
    // Keep the half-open cell convention exact under rounding of v * Delta.
    if (c > 0 && static_cast<double>(c) / delta_ > v) --c;
    if (c + 1 < delta_ && static_cast<double>(c + 1) / delta_ <= v) ++c;
    cell[static_cast<std::size_t>(j)] = c;
  }
  return cell;
}

std::int64_t DiscreteSumformer::cell_index(const RowVector& x) const {
  std::int64_t idx = 0;
  for (int c : quantize(x)) idx = idx * delta_ + c;
  return idx;
}

RowVector DiscreteSumformer::anchor(std::int64_t cell) const {
  RowVector a(d_);
  for (Eigen::Index j = d_; j-- > 0;) {
    a(j) = static_cast<double>(cell % delta_) / delta_;
    cell /= delta_;
  }
  return a;
}

DiscreteSumformer::Histogram DiscreteSumformer::encode(const RowVector& x) const {
  Histogram h(static_cast<std::size_t>(cell_count_), 0);
  h[static_cast<std::size_t>(cell_index(x))] = 1;
  return h;
}

void DiscreteSumformer::insert(Key key, RowVector value) {
  if (value.cols() != output_dim_) throw ShapeError("DiscreteSumformer: table value width");
  table_.insert_or_assign(std::move(key), std::move(value));
}

Matrix DiscreteSumformer::forward(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != d_) {
    throw ShapeError("discrete_forward: input " + shape_str(x) + ", expected " +
                     shape_str(n_, d_));
  }
  std::vector<std::int64_t> cells(static_cast<std::size_t>(n_));
  Histogram sigma(static_cast<std::size_t>(cell_count_), 0);
  for (Eigen::Index i = 0; i < n_; ++i) {
    cells[static_cast<std::size_t>(i)] = cell_index(x.row(i));
    ++sigma[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])];
  }
  Matrix out(n_, output_dim_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    const std::int64_t cell = cells[static_cast<std::size_t>(i)];
    Histogram rest = sigma;
    --rest[static_cast<std::size_t>(cell)];
    const auto it = table_.find(Key{cell, std::move(rest)});
    if (it == table_.end()) throw ContractError("discrete_forward: table has no entry for input");
    out.row(i) = it->second;
  }
  return out;
}

namespace {

// Calls visit(cells) for every non-decreasing sequence of `len` cell indices.
template <typename Visit>
void for_each_multiset(std::int64_t cell_count, std::size_t len, std::vector<std::int64_t>& cur,
                       std::int64_t start, Visit&& visit) {
  if (cur.size() == len) {
    visit(cur);
    return;
  }
  for (std::int64_t c = start; c < cell_count; ++c) {
    cur.push_back(c);
    for_each_multiset(cell_count, len, cur, c, visit);
    cur.pop_back();
  }
}

}  // namespace

DiscreteSumformer build_discrete_sumformer(const TargetFunction& target, int delta, Eigen::Index n,
                                           Eigen::Index d, double max_grid_points) {
  const double grid_points = std::pow(double(delta), double(n * d));
  if (grid_points > max_grid_points) {
    throw BudgetError("build_discrete_sumformer: Delta^(n d) = " + std::to_string(grid_points) +
                      " exceeds budget " + std::to_string(max_grid_points));
  }
  // Output width from one evaluation at the origin.
  const Eigen::Index out_dim = target.g(RowVector::Zero(d), Matrix::Zero(n - 1, d)).cols();
  DiscreteSumformer model(delta, n, d, out_dim);

  std::vector<std::int64_t> multiset;
  for (std::int64_t a = 0; a < model.cell_count(); ++a) {
    const RowVector token = model.anchor(a);
    for_each_multiset(model.cell_count(), static_cast<std::size_t>(n - 1), multiset, 0,
                      [&](const std::vector<std::int64_t>& cells) {
                        Matrix rest(n - 1, d);
                        DiscreteSumformer::Histogram hist(
                            static_cast<std::size_t>(model.cell_count()), 0);
                        for (std::size_t r = 0; r < cells.size(); ++r) {
                          rest.row(Eigen::Index(r)) = model.anchor(cells[r]);
                          ++hist[static_cast<std::size_t>(cells[r])];
                        }
                        model.insert({a, std::move(hist)}, target.g(token, rest));
                      });
  }
  return model;
}

Matrix discrete_forward(const DiscreteSumformer& model, const Matrix& x) {
  return model.forward(x);
}

double sup_error(const SequenceMap& model, const TargetFunction& target, Eigen::Index n,
                 Eigen::Index d, int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw ContractError("sup_error: sample_count >= 1");
  std::mt19937_64 rng(seed);
  const SequenceMap f = target.lifted();
  double worst = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    const Matrix x = random_sequence(n, d, rng);
    const Matrix diff = f(x) - model(x);
    const double e = diff.cwiseAbs().maxCoeff();
    if (std::isnan(e)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace sumformer

#include "sumformer/attention.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sumformer {

std::string to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::Standard: return "standard";
    case AttentionVariant::Linformer: return "linformer";
    case AttentionVariant::Performer: return "performer";
  }
  return "unknown";
}

AttentionVariant parse_variant(const std::string& name) {
  if (name == "standard") return AttentionVariant::Standard;
  if (name == "linformer") return AttentionVariant::Linformer;
  if (name == "performer") return AttentionVariant::Performer;
  throw ContractError("unknown attention variant '" + name + "'");
}

AttentionVariant variant_of(const AttentionHead& head) {
  return static_cast<AttentionVariant>(head.index());
}

const HeadWeights& weights_of(const AttentionHead& head) {
  return std::visit([](const auto& h) -> const HeadWeights& { return h.w; }, head);
}

namespace {

void check_weights(const HeadWeights& w, Eigen::Index m) {
  for (const Matrix* p : {&w.query, &w.key, &w.value}) {
    if (p->rows() != m || p->cols() != m) {
      throw ShapeError("attention head: weight " + shape_str(*p) + " for model dim " +
                       std::to_string(m));
    }
  }
}

struct Projections {
  Matrix q, k, v;
};

Projections project(const Matrix& x, const HeadWeights& w, MacCounter* counter) {
  check_weights(w, x.cols());
  return {matmul(x, w.query, counter), matmul(x, w.key, counter), matmul(x, w.value, counter)};
}

void check_linformer(const Matrix& x, const LinformerHead& head) {
  const Eigen::Index n = x.rows();
  if (head.e.cols() != n || head.f.cols() != n || head.e.rows() != head.f.rows()) {
    throw ShapeError("linformer: E " + shape_str(head.e) + ", F " + shape_str(head.f) +
                     " for n = " + std::to_string(n));
  }
  if (head.rank() >= n) {
    throw ContractError("linformer: projection rank k = " + std::to_string(head.rank()) +
                        " must be below n = " + std::to_string(n));
  }
}

Matrix linformer_attention(const Projections& p, const LinformerHead& head, Eigen::Index m,
                           MacCounter* counter) {
  const Matrix ek = matmul(head.e, p.k, counter);
  return softmax_rows(matmul(p.q, ek.transpose(), counter) / std::sqrt(double(m)));
}

Matrix standard_attention(const Projections& p, Eigen::Index m, MacCounter* counter) {
  return softmax_rows(matmul(p.q, p.k.transpose(), counter) / std::sqrt(double(m)));
}

}  // namespace

Matrix standard_head(const Matrix& x, const StandardHead& head, MacCounter* counter) {
  const Projections p = project(x, head.w, counter);
  return matmul(standard_attention(p, x.cols(), counter), p.v, counter);
}

Matrix linformer_head(const Matrix& x, const LinformerHead& head, MacCounter* counter) {
  check_linformer(x, head);
  const Projections p = project(x, head.w, counter);
  const Matrix a = linformer_attention(p, head, x.cols(), counter);
  return matmul(a, matmul(head.f, p.v, counter), counter);
}

RowVector performer_features(const RowVector& x, const Matrix& omegas) {
  return performer_feature_rows(Matrix(x), omegas).row(0);
}

Matrix performer_feature_rows(const Matrix& x, const Matrix& omegas, MacCounter* counter) {
  if (omegas.cols() != x.cols()) {
    throw ShapeError("performer_features: omegas " + shape_str(omegas) + " for tokens of width " +
                     std::to_string(x.cols()));
  }
  const double inv_sqrt_k = 1.0 / std::sqrt(double(omegas.rows()));
  Matrix out = matmul(x, omegas.transpose(), counter);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) sq += x(i, j) * x(i, j);
    if (counter != nullptr) counter->add(static_cast<std::uint64_t>(x.cols()));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = inv_sqrt_k * std::exp(out(i, j) - 0.5 * sq);
    }
  }
  return out;
}

Matrix performer_head(const Matrix& x, const PerformerHead& head, MacCounter* counter) {
  const Projections p = project(x, head.w, counter);
  const Matrix aq = performer_feature_rows(p.q, head.omegas, counter);
  const Matrix ak = performer_feature_rows(p.k, head.omegas, counter);
  const Matrix kv = matmul(ak.transpose(), p.v, counter);
  return matmul(aq, kv, counter);
}

Matrix head_forward(const Matrix& x, const AttentionHead& head, MacCounter* counter) {
  return std::visit(
      [&](const auto& h) -> Matrix {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, StandardHead>) {
          return standard_head(x, h, counter);
        } else if constexpr (std::is_same_v<T, LinformerHead>) {
          return linformer_head(x, h, counter);
        } else {
          return performer_head(x, h, counter);
        }
      },
      head);
}

Matrix attention_matrix(const Matrix& x, const AttentionHead& head) {
  return std::visit(
      [&](const auto& h) -> Matrix {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, StandardHead>) {
          return standard_attention(project(x, h.w, nullptr), x.cols(), nullptr);
        } else if constexpr (std::is_same_v<T, LinformerHead>) {
          check_linformer(x, h);
          return linformer_attention(project(x, h.w, nullptr), h, x.cols(), nullptr);
        } else {
          throw UnsupportedError("attention_matrix: Performer heads do not form a softmax matrix");
          return Matrix{};
        }
      },
      head);
}

void TransformerBlock::validate() const {
  fc.validate();
  check_params(fc, fc_params);
  const Eigen::Index m = model_dim();
  if (fc.output_width() != m) {
    throw ShapeError("TransformerBlock: FC maps " + std::to_string(m) + " to " +
                     std::to_string(fc.output_width()));
  }
  if (zero_attention) return;
  if (heads.empty()) throw ContractError("TransformerBlock: no heads and attention not zeroed");
  for (const auto& h : heads) check_weights(weights_of(h), m);
  const Eigen::Index hm = static_cast<Eigen::Index>(heads.size()) * m;
  if (output_projection.rows() != hm || output_projection.cols() != m) {
    throw ShapeError("TransformerBlock: W_O is " + shape_str(output_projection) + ", expected " +
                     shape_str(hm, m));
  }
}

Eigen::Index TransformerNetwork::model_dim() const {
  if (blocks.empty()) throw ContractError("TransformerNetwork: no blocks");
  return blocks.front().model_dim();
}

void TransformerNetwork::validate() const {
  const Eigen::Index m = model_dim();
  for (const auto& b : blocks) {
    b.validate();
    if (b.model_dim() != m) throw ShapeError("TransformerNetwork: blocks disagree on model dim");
  }
}

Matrix attention_layer(const TransformerBlock& block, const Matrix& x, MacCounter* counter) {
  if (block.zero_attention) return Matrix::Zero(x.rows(), x.cols());
  const Eigen::Index m = x.cols();
  Matrix concat(x.rows(), m * static_cast<Eigen::Index>(block.heads.size()));
  for (std::size_t h = 0; h < block.heads.size(); ++h) {
    concat.middleCols(static_cast<Eigen::Index>(h) * m, m) = head_forward(x, block.heads[h], counter);
  }
  return matmul(concat, block.output_projection, counter);
}

Matrix block_forward(const TransformerBlock& block, const Matrix& x) {
  block.validate();
  if (x.cols() != block.model_dim()) {
    throw ShapeError("block_forward: input " + shape_str(x) + " for model dim " +
                     std::to_string(block.model_dim()));
  }
  const Matrix inner = x + attention_layer(block, x);
  return x + mlp_forward(block.fc, block.fc_params, inner);
}

Matrix transformer_forward(const TransformerNetwork& net, const Matrix& x) {
  net.validate();
  if (x.cols() != net.model_dim()) {
    throw ShapeError("transformer_forward: input " + shape_str(x) + " for model dim " +
                     std::to_string(net.model_dim()));
  }
  Matrix h = x;
  for (const auto& b : net.blocks) h = block_forward(b, h);
  return h;
}

namespace {

// [e_1, 0]: only the leading constant column of the lifted input survives,
// so every query and key row is e_1 and all logits coincide.
Matrix constant_selector(Eigen::Index m) {
  Matrix w = Matrix::Zero(m, m);
  w(0, 0) = 1.0;
  return w;
}

// Maps the phi block onto the Sigma block with the given scale.
Matrix sum_value_projection(Eigen::Index d, Eigen::Index d_latent, double scale) {
  const Eigen::Index m = 1 + d + 2 * d_latent;
  Matrix w = Matrix::Zero(m, m);
  for (Eigen::Index j = 0; j < d_latent; ++j) w(1 + d + j, 1 + d + d_latent + j) = scale;
  return w;
}

}  // namespace

Matrix SumExtraction::phi(const Matrix& x) const {
  if (options.phi_net) return mlp_forward(options.phi_net->spec, options.phi_net->params, x);
  return monomial_feature_rows(x, options.basis);
}

Matrix SumExtraction::lift(const Matrix& x) const {
  if (x.cols() != options.d) {
    throw ShapeError("sum extraction: input " + shape_str(x) + " for d = " +
                     std::to_string(options.d));
  }
  Matrix lifted = Matrix::Zero(x.rows(), model_dim());
  lifted.col(0).setOnes();
  lifted.middleCols(1, options.d) = x;
  lifted.middleCols(1 + options.d, d_latent) = phi(x);
  return lifted;
}

Matrix SumExtraction::forward(const Matrix& x) const {
  if (x.rows() != options.n) {
    throw ShapeError("sum extraction: built for n = " + std::to_string(options.n) + ", got " +
                     std::to_string(x.rows()) + " tokens");
  }
  return transformer_forward(network, lift(x));
}

Matrix SumExtraction::extract_sum(const Matrix& x) const {
  return forward(x).rightCols(d_latent);
}

SumExtraction assemble_sum_extraction(const SumExtractionOptions& options, Eigen::Index d_latent,
                                      const Matrix& omegas) {
  const Eigen::Index n = options.n;
  const Eigen::Index d = options.d;
  const Eigen::Index m = 1 + d + 2 * d_latent;

  SumExtraction out;
  out.options = options;
  out.d_latent = d_latent;

  HeadWeights w;
  w.query = constant_selector(m);
  w.key = constant_selector(m);
  Matrix output_projection = Matrix::Identity(m, m);

  TransformerBlock block;
  switch (options.variant) {
    case AttentionVariant::Standard:
      w.value = sum_value_projection(d, d_latent, double(n));
      block.heads.emplace_back(StandardHead{w});
      break;
    case AttentionVariant::Linformer: {
      const Eigen::Index k = options.k;
      const double scale =
          options.value_scale == LinformerValueScale::Rank ? double(k) : double(n);
      w.value = sum_value_projection(d, d_latent, scale);
      LinformerHead head{w, Matrix::Constant(k, n, 1.0 / double(n)),
                         Matrix::Constant(k, n, 1.0 / double(k))};
      block.heads.emplace_back(std::move(head));
      break;
    }
    case AttentionVariant::Performer: {
      w.value = sum_value_projection(d, d_latent, double(n));
      // Every query/key row is e_1, so a(q) . a(k) is the same for all pairs:
      // lambda = (1/k) e^{-1} sum_j exp(2 omega_{j,1}).
      const double k = double(omegas.rows());
      double total = 0.0;
      for (Eigen::Index j = 0; j < omegas.rows(); ++j) total += std::exp(2.0 * omegas(j, 0));
      const double lambda = std::exp(-1.0) * total / k;
      if (!(lambda >= 1e-300 && lambda <= 1e300)) {
        throw ConditioningError("performer sum extraction: gram value " + std::to_string(lambda) +
                                " outside [1e-300, 1e300]; resample omegas");
      }
      out.performer_gram = lambda;
      output_projection = Matrix::Identity(m, m) / (lambda * double(n));
      block.heads.emplace_back(PerformerHead{w, omegas});
      break;
    }
  }
  block.output_projection = std::move(output_projection);

  // FC keeps only the Sigma block, so the residual X + FC(X + Att(X))
  // leaves [1, x, phi(x)] untouched and fills the last d' columns.
  block.fc = MlpSpec{{static_cast<int>(m), static_cast<int>(m)}};
  block.fc_params = zero_mlp(block.fc);
  for (Eigen::Index j = 1 + d + d_latent; j < m; ++j) block.fc_params.weights[0](j, j) = 1.0;

  out.network.blocks.push_back(std::move(block));
  out.network.validate();
  return out;
}

SumExtraction build_sum_extraction(const SumExtractionOptions& options) {
  if (options.n < 1 || options.d < 1) throw ContractError("build_sum_extraction: n, d >= 1");
  if (options.basis.d != options.d) {
    throw ShapeError("build_sum_extraction: basis for d = " + std::to_string(options.basis.d) +
                     ", tokens have d = " + std::to_string(options.d));
  }
  Eigen::Index d_latent = options.basis.size();
  if (options.phi_net) {
    const auto& spec = options.phi_net->spec;
    check_params(spec, options.phi_net->params);
    if (spec.input_width() != options.d) throw ShapeError("build_sum_extraction: phi input width");
    d_latent = spec.output_width();
  }
  const Eigen::Index m = 1 + options.d + 2 * d_latent;

  Matrix omegas;
  if (options.variant != AttentionVariant::Standard) {
    if (options.k < 1 || options.k >= options.n) {
      throw ContractError("build_sum_extraction: rank k = " + std::to_string(options.k) +
                          " must satisfy 1 <= k < n = " + std::to_string(options.n));
    }
  }
  if (options.variant == AttentionVariant::Performer) {
    if (options.omegas) {
      omegas = *options.omegas;
      if (omegas.rows() != options.k || omegas.cols() != m) {
        throw ShapeError("build_sum_extraction: omegas " + shape_str(omegas) + ", expected " +
                         shape_str(options.k, m));
      }
    } else {
      std::mt19937_64 rng(options.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      omegas.resize(options.k, m);
      for (Eigen::Index i = 0; i < omegas.rows(); ++i) {
        for (Eigen::Index j = 0; j < omegas.cols(); ++j) omegas(i, j) = normal(rng);
      }
    }
  }
  return assemble_sum_extraction(options, d_latent, omegas);
}

std::uint64_t mac_count(AttentionVariant variant, std::uint64_t n, std::uint64_t d_model,
                        std::uint64_t k) {
  const std::uint64_t m = d_model;
  const std::uint64_t projections = 3 * n * m * m;
  switch (variant) {
    case AttentionVariant::Standard: return projections + 2 * n * n * m;
    case AttentionVariant::Linformer: return projections + 4 * n * k * m;
    case AttentionVariant::Performer: return projections + 4 * n * k * m + 2 * n * m;
  }
  return 0;
}

}  // namespace sumformer

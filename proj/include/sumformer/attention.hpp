#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sumformer/mlp.hpp"
#include "sumformer/multisym.hpp"
#include "sumformer/tensor.hpp"

namespace sumformer {

enum class AttentionVariant { Standard, Linformer, Performer };

std::string to_string(AttentionVariant v);
// Accepts "standard", "linformer", "performer"; throws ContractError otherwise.
AttentionVariant parse_variant(const std::string& name);

// Square m x m projections W_Q, W_K, W_V.
struct HeadWeights {
  Matrix query;
  Matrix key;
  Matrix value;
};

struct StandardHead {
  HeadWeights w;
};

// E and F are k x n projections over the sequence axis.
struct LinformerHead {
  HeadWeights w;
  Matrix e;
  Matrix f;

  Eigen::Index rank() const { return e.rows(); }
};

// Row j of `omegas` is the random feature direction omega_j (k x m).
struct PerformerHead {
  HeadWeights w;
  Matrix omegas;

  Eigen::Index rank() const { return omegas.rows(); }
};

using AttentionHead = std::variant<StandardHead, LinformerHead, PerformerHead>;

AttentionVariant variant_of(const AttentionHead& head);
const HeadWeights& weights_of(const AttentionHead& head);

// softmax((X W_Q)(X W_K)^T / sqrt(m)) X W_V
Matrix standard_head(const Matrix& x, const StandardHead& head, MacCounter* counter = nullptr);

// softmax((X W_Q)(E X W_K)^T / sqrt(m)) F X W_V; never forms an n x n matrix.
// Requires k < n.
Matrix linformer_head(const Matrix& x, const LinformerHead& head, MacCounter* counter = nullptr);

// a(X W_Q) (a(X W_K)^T (X W_V)), right factor first.
Matrix performer_head(const Matrix& x, const PerformerHead& head, MacCounter* counter = nullptr);

Matrix head_forward(const Matrix& x, const AttentionHead& head, MacCounter* counter = nullptr);

// The row-stochastic attention matrix (n x n standard, n x k Linformer).
// Performer heads never form one and raise UnsupportedError.
Matrix attention_matrix(const Matrix& x, const AttentionHead& head);

// a(x) = k^{-1/2} exp(-|x|^2/2) [exp(omega_1 . x), ..., exp(omega_k . x)]
RowVector performer_features(const RowVector& x, const Matrix& omegas);
Matrix performer_feature_rows(const Matrix& x, const Matrix& omegas, MacCounter* counter = nullptr);

// Block(X) = X + FC(X + Att(X)) with Att(X) = [head_1(X), ..., head_h(X)] W_O.
// FC is applied token-wise. With zero_attention the block is X + FC(X).
struct TransformerBlock {
  std::vector<AttentionHead> heads;
  Matrix output_projection;  // h*m x m
  MlpSpec fc;
  MlpParams fc_params;
  bool zero_attention = false;

  Eigen::Index model_dim() const { return fc.input_width(); }
  void validate() const;
};

struct TransformerNetwork {
  std::vector<TransformerBlock> blocks;

  Eigen::Index model_dim() const;
  void validate() const;
};

Matrix attention_layer(const TransformerBlock& block, const Matrix& x,
                       MacCounter* counter = nullptr);
Matrix block_forward(const TransformerBlock& block, const Matrix& x);
Matrix transformer_forward(const TransformerNetwork& net, const Matrix& x);

// Scale carried by the value projection of the Linformer sum extraction. The
// averaging attention returns (1/k) of the value block, so the exact scale
// is k; the literal n is kept for comparison and does not recover the sum.
enum class LinformerValueScale { Rank, SequenceLength };

// Optional learned replacement for the exact monomial map phi.
struct PhiNetwork {
  MlpSpec spec;
  MlpParams params;
};

struct SumExtractionOptions {
  AttentionVariant variant = AttentionVariant::Standard;
  Eigen::Index n = 1;
  Eigen::Index d = 1;
  DegreeBasis basis;
  Eigen::Index k = 1;          // Linformer / Performer rank, k < n
  std::uint64_t seed = 0;      // Performer omegas
  std::optional<PhiNetwork> phi_net;
  std::optional<Matrix> omegas;  // overrides seeded sampling (k x m)
  LinformerValueScale value_scale = LinformerValueScale::Rank;
};

// Single-attention-layer network that writes Sigma = sum_i phi(x_i) into the
// last d' columns of every token. Raw tokens are first lifted to
// [1, x_i, phi(x_i), 0_{d'}] (model width 1 + d + 2d'); one block then maps
// the lifted sequence to [1, x_i, phi(x_i), Sigma].
struct SumExtraction {
  SumExtractionOptions options;
  Eigen::Index d_latent = 0;
  double performer_gram = 0.0;  // lambda, Performer only
  TransformerNetwork network;

  Eigen::Index model_dim() const { return 1 + options.d + 2 * d_latent; }
  // Token-wise phi (exact monomials or the supplied network).
  Matrix phi(const Matrix& x) const;
  Matrix lift(const Matrix& x) const;
  Matrix forward(const Matrix& x) const;
  // Last d' columns of forward(x).
  Matrix extract_sum(const Matrix& x) const;
};

// Throws ConditioningError when the Performer gram value lambda lies outside
// [1e-300, 1e300].
SumExtraction build_sum_extraction(const SumExtractionOptions& options);

// Rebuilds the network from stored options and matrices (used by the loader).
SumExtraction assemble_sum_extraction(const SumExtractionOptions& options, Eigen::Index d_latent,
                                      const Matrix& omegas);

// Multiply-accumulate count of one head forward pass as implemented above
// (softmax exponentials and scalar scalings are not counted).
//   standard : 3 n m^2 + 2 n^2 m
//   linformer: 3 n m^2 + 4 n k m
//   performer: 3 n m^2 + 4 n k m + 2 n m
std::uint64_t mac_count(AttentionVariant variant, std::uint64_t n, std::uint64_t d_model,
                        std::uint64_t k);

}  // namespace sumformer

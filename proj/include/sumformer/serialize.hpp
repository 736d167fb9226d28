#pragma once

#include <string>

#include "sumformer/attention.hpp"
#include "sumformer/sumformer.hpp"

// JSON documents for constructions and models.
//
// Every document carries "schema" and "version" (currently 1). Matrices are
// {"rows": r, "cols": c, "data": [...]} with data in row-major order, written
// with round-trip precision. Loaders throw FormatError on a wrong schema,
// version or shape.
//
//   sumformer.sum_extraction  variant, n, d, d_latent, k, seed, value_scale,
//                             performer_gram, phi, omegas, network
//   sumformer.model           d, d_latent, phi, psi
//   sumformer.discrete_table  delta, n, d, output_dim, entries[] of
//                             {cell, anchor, histogram, value}
namespace sumformer {

inline constexpr int kSchemaVersion = 1;

std::string save_sum_extraction(const SumExtraction& construction);
SumExtraction load_sum_extraction(const std::string& text);

std::string save_model(const SumformerModel& model);
SumformerModel load_model(const std::string& text);

std::string save_network(const TransformerNetwork& network);
TransformerNetwork load_network(const std::string& text);

// Inspection export only; there is no loader.
std::string export_discrete_table(const DiscreteSumformer& model);

}  // namespace sumformer

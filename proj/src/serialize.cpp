#include "sumformer/serialize.hpp"

#include <json.hpp>

namespace sumformer {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw FormatError("matrix: data length does not match " + shape_str(rows, cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
    }
  }
  return m;
}

json mlp_json(const MlpSpec& spec, const MlpParams& params) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    weights.push_back(matrix_json(params.weights[l]));
    biases.push_back(matrix_json(params.biases[l]));
  }
  return {{"kind", "mlp"}, {"widths", spec.widths}, {"weights", weights}, {"biases", biases}};
}

MlpMap mlp_from(const json& j) {
  MlpMap m;
  m.spec.widths = j.at("widths").get<std::vector<int>>();
  for (const auto& w : j.at("weights")) m.params.weights.push_back(matrix_from(w));
  for (const auto& b : j.at("biases")) m.params.biases.push_back(matrix_from(b));
  check_params(m.spec, m.params);
  return m;
}

json head_json(const AttentionHead& head) {
  const HeadWeights& w = weights_of(head);
  json j = {{"variant", to_string(variant_of(head))},
            {"w_q", matrix_json(w.query)},
            {"w_k", matrix_json(w.key)},
            {"w_v", matrix_json(w.value)}};
  if (const auto* h = std::get_if<LinformerHead>(&head)) {
    j["e"] = matrix_json(h->e);
    j["f"] = matrix_json(h->f);
  } else if (const auto* h = std::get_if<PerformerHead>(&head)) {
    j["omegas"] = matrix_json(h->omegas);
  }
  return j;
}

AttentionHead head_from(const json& j) {
  HeadWeights w{matrix_from(j.at("w_q")), matrix_from(j.at("w_k")), matrix_from(j.at("w_v"))};
  switch (parse_variant(j.at("variant").get<std::string>())) {
    case AttentionVariant::Standard: return StandardHead{std::move(w)};
    case AttentionVariant::Linformer:
      return LinformerHead{std::move(w), matrix_from(j.at("e")), matrix_from(j.at("f"))};
    case AttentionVariant::Performer:
      return PerformerHead{std::move(w), matrix_from(j.at("omegas"))};
  }
  throw FormatError("unknown head variant");
}

json network_json(const TransformerNetwork& net) {
  json blocks = json::array();
  for (const auto& b : net.blocks) {
    json heads = json::array();
    for (const auto& h : b.heads) heads.push_back(head_json(h));
    blocks.push_back({{"zero_attention", b.zero_attention},
                      {"heads", heads},
                      {"w_o", matrix_json(b.output_projection)},
                      {"fc", mlp_json(b.fc, b.fc_params)}});
  }
  return {{"blocks", blocks}};
}

TransformerNetwork network_from(const json& j) {
  TransformerNetwork net;
  for (const auto& jb : j.at("blocks")) {
    TransformerBlock b;
    b.zero_attention = jb.at("zero_attention").get<bool>();
    for (const auto& h : jb.at("heads")) b.heads.push_back(head_from(h));
    b.output_projection = matrix_from(jb.at("w_o"));
    MlpMap fc = mlp_from(jb.at("fc"));
    b.fc = std::move(fc.spec);
    b.fc_params = std::move(fc.params);
    net.blocks.push_back(std::move(b));
  }
  net.validate();
  return net;
}

json header(const char* schema) { return {{"schema", schema}, {"version", kSchemaVersion}}; }

json parse_document(const std::string& text, const char* schema) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed document: ") + e.what());
  }
  if (j.value("schema", "") != schema) {
    throw FormatError(std::string("expected schema ") + schema);
  }
  if (j.value("version", -1) != kSchemaVersion) {
    throw FormatError("unsupported schema version " + j.value("version", json(-1)).dump());
  }
  return j;
}

// Runs a loader body, turning json access errors into FormatError.
template <typename F>
auto guarded(F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string save_network(const TransformerNetwork& network) {
  json j = header("sumformer.network");
  j["network"] = network_json(network);
  return j.dump(1);
}

TransformerNetwork load_network(const std::string& text) {
  const json j = parse_document(text, "sumformer.network");
  return guarded([&] { return network_from(j.at("network")); });
}

std::string save_sum_extraction(const SumExtraction& c) {
  const auto& o = c.options;
  json j = header("sumformer.sum_extraction");
  j["variant"] = to_string(o.variant);
  j["n"] = o.n;
  j["d"] = o.d;
  j["d_latent"] = c.d_latent;
  j["k"] = o.k;
  j["seed"] = o.seed;
  j["value_scale"] = o.value_scale == LinformerValueScale::Rank ? "rank" : "sequence_length";
  j["performer_gram"] = c.performer_gram;
  if (o.phi_net) {
    j["phi"] = mlp_json(o.phi_net->spec, o.phi_net->params);
  } else {
    j["phi"] = {{"kind", "monomial"}, {"n_max", o.basis.n_max}};
  }
  j["network"] = network_json(c.network);
  return j.dump(1);
}

SumExtraction load_sum_extraction(const std::string& text) {
  const json j = parse_document(text, "sumformer.sum_extraction");
  return guarded([&] {
    SumExtraction c;
    auto& o = c.options;
    o.variant = parse_variant(j.at("variant").get<std::string>());
    o.n = j.at("n").get<Eigen::Index>();
    o.d = j.at("d").get<Eigen::Index>();
    o.k = j.at("k").get<Eigen::Index>();
    o.seed = j.at("seed").get<std::uint64_t>();
    const auto scale = j.at("value_scale").get<std::string>();
    if (scale != "rank" && scale != "sequence_length") throw FormatError("bad value_scale");
    o.value_scale =
        scale == "rank" ? LinformerValueScale::Rank : LinformerValueScale::SequenceLength;
    c.d_latent = j.at("d_latent").get<Eigen::Index>();
    c.performer_gram = j.at("performer_gram").get<double>();
    const auto& phi = j.at("phi");
    if (phi.at("kind") == "mlp") {
      MlpMap m = mlp_from(phi);
      o.phi_net = PhiNetwork{std::move(m.spec), std::move(m.params)};
    } else {
      o.basis = enumerate_multidegrees(int(o.d), phi.at("n_max").get<int>());
    }
    if (!o.phi_net) o.basis.d = o.d;
    c.network = network_from(j.at("network"));
    if (c.network.model_dim() != c.model_dim()) {
      throw FormatError("sum extraction: network width does not match 1 + d + 2 d'");
    }
    return c;
  });
}

std::string save_model(const SumformerModel& model) {
  json j = header("sumformer.model");
  j["d"] = model.d;
  j["d_latent"] = model.d_latent;
  if (const auto* p = std::get_if<PolynomialPhi>(&model.phi)) {
    j["phi"] = {{"kind", "monomial"}, {"n_max", p->basis.n_max}};
  } else {
    const auto& m = std::get<MlpMap>(model.phi);
    j["phi"] = mlp_json(m.spec, m.params);
  }
  if (const auto* m = std::get_if<MlpMap>(&model.psi)) {
    j["psi"] = mlp_json(m->spec, m->params);
  } else {
    json components = json::array();
    for (const auto& comp : std::get<PolynomialPsi>(model.psi).components) {
      json terms = json::array();
      for (const auto& t : comp) {
        json sigma = json::array();
        for (const auto& mono : t.sigma.terms) {
          sigma.push_back({{"c", mono.coefficient}, {"e", mono.exponents}});
        }
        terms.push_back({{"alpha", t.alpha.exponents}, {"sigma", sigma}});
      }
      components.push_back(terms);
    }
    j["psi"] = {{"kind", "polynomial"}, {"components", components}};
  }
  return j.dump(1);
}

SumformerModel load_model(const std::string& text) {
  const json j = parse_document(text, "sumformer.model");
  return guarded([&] {
    SumformerModel model;
    model.d = j.at("d").get<Eigen::Index>();
    model.d_latent = j.at("d_latent").get<Eigen::Index>();
    const auto& phi = j.at("phi");
    if (phi.at("kind") == "mlp") {
      model.phi = mlp_from(phi);
    } else {
      model.phi = PolynomialPhi{enumerate_multidegrees(int(model.d), phi.at("n_max").get<int>())};
    }
    const auto& psi = j.at("psi");
    if (psi.at("kind") == "mlp") {
      model.psi = mlp_from(psi);
    } else {
      PolynomialPsi poly;
      for (const auto& comp : psi.at("components")) {
        std::vector<PsiTerm> terms;
        for (const auto& t : comp) {
          PsiTerm term;
          term.alpha.exponents = t.at("alpha").get<std::vector<int>>();
          for (const auto& mono : t.at("sigma")) {
            term.sigma.terms.push_back(
                {mono.at("c").get<double>(), mono.at("e").get<std::vector<int>>()});
          }
          terms.push_back(std::move(term));
        }
        poly.components.push_back(std::move(terms));
      }
      model.psi = std::move(poly);
    }
    try {
      model.validate();
    } catch (const std::exception& e) {
      throw FormatError(std::string("model: ") + e.what());
    }
    return model;
  });
}

std::string export_discrete_table(const DiscreteSumformer& model) {
  json j = header("sumformer.discrete_table");
  j["delta"] = model.delta();
  j["n"] = model.n();
  j["d"] = model.d();
  j["output_dim"] = model.output_dim();
  json entries = json::array();
  for (const auto& [key, value] : model.table()) {
    const RowVector a = model.anchor(key.first);
    entries.push_back({{"cell", key.first},
                       {"anchor", std::vector<double>(a.data(), a.data() + a.size())},
                       {"histogram", key.second},
                       {"value", std::vector<double>(value.data(), value.data() + value.size())}});
  }
  j["entries"] = std::move(entries);
  return j.dump(1);
}

}  // namespace sumformer

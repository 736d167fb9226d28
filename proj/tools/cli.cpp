#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sumformer/attention.hpp"
#include "sumformer/equivariance.hpp"
#include "sumformer/serialize.hpp"
#include "sumformer/train.hpp"
#include "sumformer/verify.hpp"

namespace sumformer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string out = "out";
  std::uint64_t seed = 0;
  int seeds = 1;
  int n = 3;
  int d = 2;
  int d_latent = 32;
  int delta = 8;
  int k = 2;
  std::string target = "cubic_interaction";
  int epochs = 200;
  int points = 2000;
  std::optional<double> tol;
  std::string variant;  // empty: all variants
  std::string model = "mlp";
  int batch_size = 32;
  double lr = 1e-3;
  int threads = 1;
  int trials = 100;
  std::string linformer_scale = "rank";
  std::vector<int> d_list;
  std::vector<int> dprime_list = {2, 8, 32, 128};
  std::vector<int> n_list = {32, 64, 128, 256};
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate(const RunConfig& c) {
  require(c.n >= 1, "n must be >= 1");
  require(c.d >= 1, "d must be >= 1");
  require(c.d_latent >= 1, "d-latent must be >= 1");
  require(c.delta >= 1, "delta must be >= 1");
  require(c.k >= 1, "k must be >= 1");
  require(c.epochs >= 0, "epochs must be >= 0");
  require(c.points >= 2, "points must be >= 2");
  require(c.seeds >= 1, "seeds must be >= 1");
  require(c.batch_size >= 0, "batch-size must be >= 0");
  require(c.lr >= 0.0, "lr must be >= 0");
  require(c.threads >= 1, "threads must be >= 1");
  require(c.trials >= 1, "trials must be >= 1");
  require(!c.tol || *c.tol >= 0.0, "tol must be >= 0");
  require(c.model == "mlp" || c.model == "polynomial", "model must be mlp or polynomial");
  require(c.linformer_scale == "rank" || c.linformer_scale == "sequence_length",
          "linformer-scale must be rank or sequence_length");
  if (!c.variant.empty()) {
    try {
      parse_variant(c.variant);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  const auto names = target_names();
  require(std::find(names.begin(), names.end(), c.target) != names.end(),
          "unknown target '" + c.target + "'");
  for (int v : c.d_list) require(v >= 1, "d-list entries must be >= 1");
  for (int v : c.dprime_list) require(v >= 1, "dprime-list entries must be >= 1");
  for (int v : c.n_list) require(v >= 1, "n-list entries must be >= 1");
  require(!c.dprime_list.empty() && !c.n_list.empty(), "lists must be non-empty");
  if (c.command == "bench" && (c.variant.empty() || c.variant == "linformer")) {
    for (int n : c.n_list) require(c.k < n, "bench needs k < n for every n in n-list");
  }
  if (c.command == "verify") {
    require(c.k < c.n, "verify needs k < n for the Linformer and Performer constructions");
  }
}

std::vector<std::uint64_t> seed_list(const RunConfig& c) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < c.seeds; ++i) s.push_back(c.seed + std::uint64_t(i));
  return s;
}

json config_json(const RunConfig& c) {
  json j = {{"command", c.command}, {"out", c.out},         {"seed", c.seed},
            {"seeds", c.seeds},     {"n", c.n},             {"d", c.d},
            {"d_latent", c.d_latent}, {"delta", c.delta},   {"k", c.k},
            {"target", c.target},   {"epochs", c.epochs},   {"points", c.points},
            {"variant", c.variant}, {"model", c.model},     {"batch_size", c.batch_size},
            {"lr", c.lr},           {"threads", c.threads}, {"trials", c.trials},
            {"linformer_scale", c.linformer_scale},         {"d_list", c.d_list},
            {"dprime_list", c.dprime_list},                 {"n_list", c.n_list}};
  j["tol"] = c.tol ? json(*c.tol) : json(nullptr);
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string matrix_text(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << "\n";
  }
  return os.str();
}

ExperimentConfig experiment(const RunConfig& c) {
  ExperimentConfig e;
  e.n = c.n;
  e.d = c.d;
  e.d_latent = c.d_latent;
  e.points = c.points;
  e.polynomial_phi = c.model == "polynomial";
  e.train.epochs = c.epochs;
  e.train.adam.learning_rate = c.lr;
  e.train.adam.batch_size = static_cast<std::size_t>(c.batch_size);
  return e;
}

void write_manifest(const fs::path& dir, const RunConfig& c, const json& extra) {
  json m = {{"schema", "sumformer.run_manifest"}, {"version", kSchemaVersion},
            {"config", config_json(c)}};
  const auto seeds = seed_list(c);
  m["seeds"] = seeds;
  const TargetFunction t = target_by_name(c.target);
  m["target"] = {{"name", t.name}, {"formula", t.formula}, {"invented", t.invented}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_file(dir / "run_manifest.json", m.dump(1) + "\n");
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  VerifyConfig vc;
  vc.n = c.n;
  vc.d = c.d;
  vc.k = c.k;
  vc.delta = c.delta;
  vc.trials = c.trials;
  vc.seed = c.seed;
  vc.tol = c.tol;
  vc.linformer_scale = c.linformer_scale == "rank" ? LinformerValueScale::Rank
                                                   : LinformerValueScale::SequenceLength;
  const VerifyReport report = run_verification(vc);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  json props = json::array();
  for (const auto& p : report.properties) {
    std::string witness_path;
    if (!p.passed && p.witness.size() > 0) {
      fs::create_directories(dir / "witnesses");
      witness_path = (fs::path("witnesses") / (p.name + ".txt")).string();
      write_file(dir / witness_path, matrix_text(p.witness));
    }
    props.push_back({{"name", p.name},
                     {"status", p.passed ? "pass" : "fail"},
                     {"max_residual", p.max_residual},
                     {"tolerance", p.tolerance},
                     {"detail", p.detail},
                     {"witness_path", witness_path.empty() ? json(nullptr) : json(witness_path)}});
    out << (p.passed ? "PASS " : "FAIL ") << p.name << "  max_residual=" << p.max_residual
        << "  tol=" << p.tolerance;
    if (!witness_path.empty()) out << "  witness=" << witness_path;
    out << "\n";
  }
  json doc = {{"schema", "sumformer.verify_report"},
              {"version", kSchemaVersion},
              {"passed", report.all_passed()},
              {"config", config_json(c)},
              {"properties", props}};
  write_file(dir / "verify_report.json", doc.dump(1) + "\n");
  return report.all_passed() ? kOk : kVerificationFailed;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TargetFunction target = target_by_name(c.target);
  const ExperimentConfig e = experiment(c);
  const fs::path dir(c.out);
  fs::create_directories(dir);

  json summary = json::array();
  int status = kOk;
  for (std::uint64_t seed : seed_list(c)) {
    const std::string suffix = c.seeds == 1 ? "" : "_seed" + std::to_string(seed);
    TrainReport report;
    std::optional<SumformerModel> model;
    try {
      SumformerModel trained;
      report = run_experiment(target, e, seed, &trained);
      model = std::move(trained);
    } catch (const DivergenceError& d) {
      err << d.what() << "\n";
      report = d.last_good();
      status = kDiverged;
    }
    std::ostringstream csv;
    write_curve_csv(csv, report);
    write_file(dir / ("train_curve" + suffix + ".csv"), csv.str());
    if (model) write_file(dir / ("model" + suffix + ".json"), save_model(*model));
    summary.push_back({{"seed", seed},
                       {"best_validation_error", report.best_validation_error},
                       {"epochs", report.epochs}});
    out << "seed " << seed << "  best_val_rel_l2=" << report.best_validation_error << "\n";
    if (status == kDiverged) break;
  }
  write_manifest(dir, c, {{"runs", summary}});
  return status;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TargetFunction target = target_by_name(c.target);
  std::vector<Eigen::Index> ds;
  for (int d : c.d_list.empty() ? std::vector<int>{c.d} : c.d_list) ds.push_back(d);
  std::vector<Eigen::Index> dps(c.dprime_list.begin(), c.dprime_list.end());
  std::vector<SweepRow> rows;
  try {
    rows = latent_sweep(target, experiment(c), ds, dps, seed_list(c), c.threads);
  } catch (const DivergenceError& d) {
    err << d.what() << "\n";
    return kDiverged;
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_file(dir / "sweep.csv", csv.str());
  write_manifest(dir, c, json::object());
  out << csv.str();
  return kOk;
}

// Random head of the given variant; used to count MACs of a real forward pass.
AttentionHead random_head(AttentionVariant v, Eigen::Index n, Eigen::Index m, Eigen::Index k,
                          std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index cols) {
    return Matrix(Matrix::NullaryExpr(r, cols, [&] { return normal(rng) / std::sqrt(double(m)); }));
  };
  HeadWeights w{gaussian(m, m), gaussian(m, m), gaussian(m, m)};
  switch (v) {
    case AttentionVariant::Standard:
      return StandardHead{w};
    case AttentionVariant::Linformer:
      return LinformerHead{w, gaussian(k, n), gaussian(k, n)};
    case AttentionVariant::Performer:
      return PerformerHead{w, gaussian(k, m)};
  }
  throw ContractError("unknown variant");
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
  std::vector<AttentionVariant> variants = {AttentionVariant::Standard,
                                            AttentionVariant::Linformer,
                                            AttentionVariant::Performer};
  if (!c.variant.empty()) variants = {parse_variant(c.variant)};
  std::ostringstream csv;
  csv << "variant,n,d_model,k,macs,counted_macs,ratio_to_previous\n";
  std::mt19937_64 rng(c.seed);
  for (AttentionVariant v : variants) {
    std::uint64_t previous = 0;
    for (int n : c.n_list) {
      const std::uint64_t macs = mac_count(v, std::uint64_t(n), std::uint64_t(c.d), std::uint64_t(c.k));
      MacCounter counter;
      const Matrix x = random_sequence(n, c.d, rng);
      head_forward(x, random_head(v, n, c.d, c.k, rng), &counter);
      csv << to_string(v) << "," << n << "," << c.d << "," << c.k << "," << macs << ","
          << counter.macs << ",";
      if (previous != 0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", double(macs) / double(previous));
        csv << buf;
      }
      csv << "\n";
      previous = macs;
    }
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_file(dir / "bench.csv", csv.str());
  out << csv.str();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Sumformer constructions, verification suite and experiments", "sumformer"};
  app.set_config("--config", "", "Key-value config file (flag names as keys)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--out", c.out, "Output directory");
  app.add_option("--seed", c.seed, "Base seed");
  app.add_option("--seeds", c.seeds, "Number of consecutive seeds starting at --seed");
  app.add_option("--n", c.n, "Sequence length");
  app.add_option("--d", c.d, "Token dimension (model width for bench)");
  app.add_option("--d-latent", c.d_latent, "Latent dimension d'");
  app.add_option("--delta", c.delta, "Grid cells per axis for the discrete construction");
  app.add_option("--k", c.k, "Linformer / Performer rank");
  app.add_option("--target", c.target, "Target function name");
  app.add_option("--epochs", c.epochs, "Training epochs");
  app.add_option("--points", c.points, "Dataset size");
  app.add_option("--tol", c.tol, "Override every floating-point tolerance of verify");
  app.add_option("--variant", c.variant, "standard | linformer | performer");
  app.add_option("--model", c.model, "mlp | polynomial (phi of the trained Sumformer)");
  app.add_option("--batch-size", c.batch_size, "Mini-batch size, 0 for full batch");
  app.add_option("--lr", c.lr, "Adam learning rate");
  app.add_option("--threads", c.threads, "Worker threads for sweep cells");
  app.add_option("--trials", c.trials, "Random trials per verify property");
  app.add_option("--linformer-scale", c.linformer_scale, "rank | sequence_length");
  app.add_option("--d-list", c.d_list, "Token dimensions for sweep")->delimiter(',');
  app.add_option("--dprime-list", c.dprime_list, "Latent dimensions for sweep")->delimiter(',');
  app.add_option("--n-list", c.n_list, "Sequence lengths for bench")->delimiter(',');

  for (const char* name : {"verify", "train", "sweep", "bench"}) {
    app.add_subcommand(name)->callback([&c, name] { c.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  if (c.command == "verify") return cmd_verify(c, out);
  if (c.command == "train") return cmd_train(c, out, err);
  if (c.command == "sweep") return cmd_sweep(c, out, err);
  return cmd_bench(c, out);
}

}  // namespace sumformer::cli

#include "sumformer/verify.hpp"

#include <random>

#include "sumformer/equivariance.hpp"
#include "sumformer/gradcheck.hpp"
#include "sumformer/multisym.hpp"
#include "sumformer/sumformer.hpp"
#include "sumformer/targets.hpp"

namespace sumformer {

bool VerifyReport::all_passed() const {
  for (const auto& p : properties) {
    if (!p.passed) return false;
  }
  return true;
}

const PropertyResult* VerifyReport::find(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

class Suite {
 public:
  explicit Suite(const VerifyConfig& config) : config_(config) {}

  double tol(double fallback) const { return config_.tol.value_or(fallback); }

  void record(PropertyResult r) { report_.properties.push_back(std::move(r)); }

  // Tracks the worst residual and its input.
  struct Worst {
    double value = 0.0;
    Matrix witness;
    void consider(double v, const Matrix& x) {
      if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
      if (v > value || witness.size() == 0) {
        value = std::max(value, v);
        witness = x;
      }
    }
  };

  void floating(const std::string& name, const Worst& w, double tolerance, std::string detail = {}) {
    record({name, w.value <= tolerance, w.value, tolerance, std::move(detail), w.witness});
  }

  void from_check(const std::string& name, const CheckReport& c, double tolerance) {
    record({name, c.max_violation <= tolerance, c.max_violation, tolerance,
            "permutation " + c.witness_permutation.str(), c.witness_input});
  }

  VerifyReport finish() { return std::move(report_); }

 private:
  VerifyConfig config_;
  VerifyReport report_;
};

SumExtractionOptions extraction_options(const VerifyConfig& c, AttentionVariant v,
                                        std::uint64_t seed) {
  SumExtractionOptions o;
  o.variant = v;
  o.n = c.n;
  o.d = c.d;
  o.basis = enumerate_multidegrees(int(c.d), int(c.n));
  o.k = c.k;
  o.seed = seed;
  o.value_scale = c.linformer_scale;
  return o;
}

void check_counts(Suite& s) {
  // Pascal's triangle as the independent count.
  std::vector<std::vector<std::uint64_t>> pascal(15, std::vector<std::uint64_t>(15, 0));
  for (int a = 0; a < 15; ++a) {
    pascal[a][0] = 1;
    for (int b = 1; b <= a; ++b) pascal[a][b] = pascal[a - 1][b - 1] + pascal[a - 1][b];
  }
  double mismatches = 0;
  for (int d = 1; d <= 6; ++d) {
    for (int n = 1; n <= 8; ++n) {
      const auto expected = pascal[n + d][d] - 1;
      if (enumerate_multidegrees(d, n).degrees.size() != expected) mismatches += 1;
    }
  }
  s.record({"multidegree_count", mismatches == 0, mismatches, 0.0,
            "enumerated sizes vs C(n+d,d)-1 for d<=6, n<=8", {}});
}

void check_sum_extraction(Suite& s, const VerifyConfig& c) {
  std::mt19937_64 rng(c.seed);
  const DegreeBasis basis = enumerate_multidegrees(int(c.d), int(c.n));

  const SumExtraction standard = build_sum_extraction(extraction_options(c, AttentionVariant::Standard, c.seed));
  Suite::Worst averaging;
  {
    const Matrix x = random_sequence(c.n, c.d, rng);
    const Matrix a = attention_matrix(standard.lift(x), standard.network.blocks[0].heads[0]);
    averaging.consider((a.array() - 1.0 / double(c.n)).abs().maxCoeff(), x);
  }
  s.floating("averaging_attention", averaging, s.tol(1e-12));

  const bool ranked = c.k >= 1 && c.k < c.n;
  struct Case {
    AttentionVariant variant;
    double tolerance;
  };
  for (const Case& cs : {Case{AttentionVariant::Standard, 1e-10},
                         Case{AttentionVariant::Linformer, 1e-10},
                         Case{AttentionVariant::Performer, 1e-8}}) {
    const std::string tag = to_string(cs.variant);
    if (cs.variant != AttentionVariant::Standard && !ranked) {
      s.record({"sigma_recovery_" + tag, false, 0.0, cs.tolerance, "k must satisfy 1 <= k < n", {}});
      continue;
    }
    const SumExtraction net = build_sum_extraction(extraction_options(c, cs.variant, c.seed));
    Suite::Worst worst;
    std::mt19937_64 xs(c.seed + 17);
    for (int t = 0; t < c.trials; ++t) {
      const Matrix x = random_sequence(c.n, c.d, xs);
      const Matrix out = net.forward(x);
      const RowVector sigma = power_sum_vector(x, basis);
      double r = 0.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        r = std::max(r, (out.row(i).tail(net.d_latent) - sigma).cwiseAbs().maxCoeff());
        // The lifted prefix [1, x, phi(x)] must pass through unchanged.
        r = std::max(r, (out.row(i).head(1 + c.d + net.d_latent) -
                         net.lift(x).row(i).head(1 + c.d + net.d_latent))
                            .cwiseAbs()
                            .maxCoeff());
      }
      worst.consider(r, x);
    }
    s.floating("sigma_recovery_" + tag, worst, s.tol(cs.tolerance));

    CheckOptions opt;
    opt.trials = c.trials;
    opt.seed = c.seed + 29;
    opt.tol = s.tol(1e-10);
    s.from_check("equivariance_sum_extraction_" + tag,
                 check_equivariance([&](const Matrix& x) { return net.forward(x); }, c.n, c.d, opt),
                 opt.tol);
  }
}

void check_sumformers(Suite& s, const VerifyConfig& c) {
  CheckOptions opt;
  opt.trials = c.trials;
  opt.seed = c.seed + 31;
  opt.tol = s.tol(1e-10);

  const SumformerModel mlp = make_mlp_sumformer(c.d, 8, 2, 16, c.seed);
  s.from_check("equivariance_mlp_sumformer",
               check_equivariance([&](const Matrix& x) { return sumformer_forward(mlp, x); }, c.n,
                                  c.d, opt),
               opt.tol);
  const SumformerModel poly = make_polynomial_sumformer(c.n, c.d, 2, 16, c.seed);
  s.from_check("equivariance_polynomial_sumformer",
               check_equivariance([&](const Matrix& x) { return sumformer_forward(poly, x); }, c.n,
                                  c.d, opt),
               opt.tol);
}

void check_discrete(Suite& s, const VerifyConfig& c) {
  const TargetFunction target = square_rest_target();
  const Eigen::Index n = c.n;
  const Eigen::Index d = 1;
  DiscreteSumformer ds(1, 1, 1, 1);
  try {
    ds = build_discrete_sumformer(target, c.delta, n, d);
  } catch (const BudgetError& e) {
    s.record({"discrete_equivariance", false, 0.0, 0.0, e.what(), {}});
    return;
  }
  CheckOptions opt;
  opt.trials = c.trials;
  opt.seed = c.seed + 37;
  opt.tol = 0.0;  // integer histogram lookups: exact
  s.from_check("discrete_equivariance",
               check_equivariance([&](const Matrix& x) { return ds.forward(x); }, n, d, opt), 0.0);

  // At grid anchors the table returns g itself.
  std::mt19937_64 rng(c.seed + 41);
  std::uniform_int_distribution<int> cell(0, c.delta - 1);
  Suite::Worst worst;
  const SequenceMap f = target.lifted();
  for (int t = 0; t < c.trials; ++t) {
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = double(cell(rng)) / c.delta;
    worst.consider((ds.forward(x) - f(x)).cwiseAbs().maxCoeff(), x);
  }
  s.floating("discrete_anchor_exactness", worst, 0.0);
}

void check_generation(Suite& s, const VerifyConfig& c) {
  GenerationOptions o;
  o.d = 1;
  o.n = 2;
  o.seed = c.seed;
  const GenerationFit e2 = generation_oracle(
      [](const Matrix& x) { return x(0, 0) * x(1, 0); }, o);
  s.record({"generation_oracle_e2", e2.max_residual <= s.tol(1e-9), e2.max_residual, s.tol(1e-9),
            "sum_{i<j} x_i x_j at d=1, n=2", {}});

  o.d = 2;
  const GenerationFit mixed = generation_oracle(
      [](const Matrix& x) { return x(0, 0) * x(1, 1) + x(1, 0) * x(0, 1); }, o);
  s.record({"generation_oracle_mixed", mixed.max_residual <= s.tol(1e-8), mixed.max_residual,
            s.tol(1e-8), "e_{1,1} at d=2, n=2", {}});
}

void check_gradients(Suite& s, const VerifyConfig& c) {
  double worst = 0.0;
  Matrix witness;
  for (int t = 0; t < c.trials; ++t) {
    const GradientCheckResult r = check_mlp_gradient(c.seed + std::uint64_t(t));
    if (r.relative_error > worst || witness.size() == 0) {
      worst = std::max(worst, r.relative_error);
      witness = r.input;
    }
  }
  s.record({"gradient_check", worst <= s.tol(1e-5), worst, s.tol(1e-5),
            "tape vs central differences, step 1e-5", witness});
}

}  // namespace

VerifyReport run_verification(const VerifyConfig& config) {
  Suite suite(config);
  check_counts(suite);
  check_sum_extraction(suite, config);
  check_sumformers(suite, config);
  check_discrete(suite, config);
  check_generation(suite, config);
  check_gradients(suite, config);
  return suite.finish();
}

}  // namespace sumformer

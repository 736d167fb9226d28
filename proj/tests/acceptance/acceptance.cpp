// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sumformer/attention.hpp"
#include "sumformer/equivariance.hpp"
#include "sumformer/gradcheck.hpp"
#include "sumformer/multisym.hpp"
#include "sumformer/sumformer.hpp"
#include "sumformer/targets.hpp"
#include "sumformer/train.hpp"

using namespace sumformer;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SumExtractionOptions extraction(AttentionVariant v, Eigen::Index n, Eigen::Index d, Eigen::Index k,
                                std::uint64_t seed) {
  SumExtractionOptions o;
  o.variant = v;
  o.n = n;
  o.d = d;
  o.basis = enumerate_multidegrees(int(d), int(n));
  o.k = k;
  o.seed = seed;
  return o;
}

// Largest deviation of the last d' columns from the power sums and of the
// leading columns from the lifted input.
double recovery_residual(const SumExtraction& s, const Matrix& x) {
  const Matrix out = s.forward(x);
  const Matrix lifted = s.lift(x);
  const RowVector sigma = power_sum_vector(x, s.options.basis);
  const Eigen::Index keep = 1 + s.options.d + s.d_latent;
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    r = std::max(r, (out.row(i).tail(s.d_latent) - sigma).cwiseAbs().maxCoeff());
    r = std::max(r, (out.row(i).head(keep) - lifted.row(i).head(keep)).cwiseAbs().maxCoeff());
  }
  return std::isnan(r) ? INFINITY : r;
}

Outcome standard_recovery() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int configs = 0;
  for (Eigen::Index n = 2; n <= 6; ++n) {
    for (Eigen::Index d = 1; d <= 3; ++d) {
      const SumExtraction s = build_sum_extraction(extraction(AttentionVariant::Standard, n, d, 1, 0));
      std::mt19937_64 rng(1000 * n + d);
      for (int t = 0; t < 100; ++t) worst = std::max(worst, recovery_residual(s, random_sequence(n, d, rng)));
      ++configs;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0,
          std::to_string(configs) + " configs x 100 inputs, max residual " + fmt("%.3g", worst) +
              " (tol 1e-10), " + fmt("%.2f", secs) + " s (limit 10 s)"};
}

Outcome linformer_recovery() {
  double worst = 0.0;
  double literal_min = INFINITY;
  int configs = 0;
  for (Eigen::Index n = 2; n <= 6; ++n) {
    for (Eigen::Index d = 1; d <= 3; ++d) {
      for (Eigen::Index k = 1; k < n; ++k) {
        SumExtractionOptions o = extraction(AttentionVariant::Linformer, n, d, k, 0);
        const SumExtraction exact = build_sum_extraction(o);
        o.value_scale = LinformerValueScale::SequenceLength;
        const SumExtraction literal = build_sum_extraction(o);
        std::mt19937_64 rng(1000 * n + 10 * d + k);
        double literal_worst = 0.0;
        for (int t = 0; t < 100; ++t) {
          const Matrix x = random_sequence(n, d, rng);
          worst = std::max(worst, recovery_residual(exact, x));
          literal_worst = std::max(literal_worst, recovery_residual(literal, x));
        }
        literal_min = std::min(literal_min, literal_worst);
        ++configs;
      }
    }
  }
  return {worst <= 1e-10 && literal_min >= 1e-2,
          std::to_string(configs) + " (n,d,k) configs, scale k: max residual " + fmt("%.3g", worst) +
              " (tol 1e-10); scale n: smallest residual " + fmt("%.3g", literal_min) +
              " (must be >= 1e-2)"};
}

Outcome performer_recovery() {
  double worst = 0.0;
  int configs = 0;
  for (Eigen::Index n = 2; n <= 6; ++n) {
    for (Eigen::Index d = 1; d <= 3; ++d) {
      for (Eigen::Index k = 1; k < n; ++k) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
          const SumExtraction s = build_sum_extraction(extraction(AttentionVariant::Performer, n, d, k, seed));
          std::mt19937_64 rng(seed * 7919 + std::uint64_t(100 * n + 10 * d + k));
          for (int t = 0; t < 10; ++t) worst = std::max(worst, recovery_residual(s, random_sequence(n, d, rng)));
        }
        ++configs;
      }
    }
  }
  return {worst <= 1e-8, std::to_string(configs) + " (n,d,k) configs x 10 omega seeds x 10 inputs, max residual " +
                             fmt("%.3g", worst) + " (tol 1e-8)"};
}

Outcome averaging_attention() {
  double worst = 0.0;
  for (Eigen::Index n = 1; n <= 64; ++n) {
    const SumExtraction s = build_sum_extraction(extraction(AttentionVariant::Standard, n, 1, 1, 0));
    std::mt19937_64 rng(n);
    for (int t = 0; t < 5; ++t) {
      const Matrix a = attention_matrix(s.lift(random_sequence(n, 1, rng)), s.network.blocks[0].heads[0]);
      worst = std::max(worst, (a.array() - 1.0 / double(n)).abs().maxCoeff());
    }
  }
  return {worst <= 1e-12, "n = 1..64, max |A - 1/n| " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

Outcome equivariance() {
  CheckOptions opt;
  opt.trials = 100;
  opt.tol = 1e-10;
  double worst = 0.0;
  double discrete_worst = 0.0;
  int maps = 0;
  auto check = [&](const SequenceMap& f, Eigen::Index n, Eigen::Index d, double& sink) {
    opt.seed = std::uint64_t(maps);
    sink = std::max(sink, check_equivariance(f, n, d, opt).max_violation);
    ++maps;
  };
  for (Eigen::Index n = 2; n <= 5; ++n) {
    for (Eigen::Index d = 1; d <= 2; ++d) {
      const SumformerModel mlp = make_mlp_sumformer(d, 16, 2, 32, std::uint64_t(10 * n + d));
      const SumformerModel poly = make_polynomial_sumformer(n, d, 2, 32, std::uint64_t(10 * n + d));
      check([&](const Matrix& x) { return sumformer_forward(mlp, x); }, n, d, worst);
      check([&](const Matrix& x) { return sumformer_forward(poly, x); }, n, d, worst);
      for (auto v : {AttentionVariant::Standard, AttentionVariant::Linformer, AttentionVariant::Performer}) {
        const SumExtraction s = build_sum_extraction(extraction(v, n, d, n - 1, 3));
        check([&](const Matrix& x) { return s.forward(x); }, n, d, worst);
      }
    }
  }
  const TargetFunction target = square_rest_target();
  for (Eigen::Index n = 2; n <= 4; ++n) {
    const DiscreteSumformer s = build_discrete_sumformer(target, 4, n, 1);
    check([&](const Matrix& x) { return s.forward(x); }, n, 1, discrete_worst);
  }
  const DiscreteSumformer s2 = build_discrete_sumformer(cubic_interaction_target(), 3, 2, 2);
  check([&](const Matrix& x) { return s2.forward(x); }, 2, 2, discrete_worst);
  return {worst <= 1e-10 && discrete_worst == 0.0,
          std::to_string(maps) + " maps x 100 trials (all permutations), continuous max " +
              fmt("%.3g", worst) + " (tol 1e-10), discrete max " + fmt("%.3g", discrete_worst) +
              " (must be 0)"};
}

Outcome latent_counts() {
  std::vector<std::vector<std::uint64_t>> pascal(15, std::vector<std::uint64_t>(15, 0));
  for (int a = 0; a < 15; ++a) {
    pascal[a][0] = 1;
    for (int b = 1; b <= a; ++b) pascal[a][b] = pascal[a - 1][b - 1] + pascal[a - 1][b];
  }
  int mismatches = 0;
  for (int d = 1; d <= 6; ++d) {
    for (int n = 1; n <= 8; ++n) {
      const std::uint64_t expected = pascal[n + d][d] - 1;
      if (enumerate_multidegrees(d, n).degrees.size() != expected) ++mismatches;
      if (latent_dimension(n, d) != expected) ++mismatches;
    }
  }
  const std::size_t spot = enumerate_multidegrees(4, 5).degrees.size();
  return {mismatches == 0 && spot == 125,
          "48 (d,n) pairs, " + std::to_string(mismatches) + " mismatches; d=4,n=5 -> " + std::to_string(spot)};
}

Outcome generation() {
  struct Case {
    std::string name;
    int d, n;
    std::function<double(const Matrix&)> f;
  };
  const std::vector<Case> cases{
      {"e2 d=1 n=2", 1, 2, [](const Matrix& x) { return x(0, 0) * x(1, 0); }},
      {"p1 d=1 n=3", 1, 3, [](const Matrix& x) { return x.sum(); }},
      {"e11 d=2 n=2", 2, 2, [](const Matrix& x) { return x(0, 0) * x(1, 1) + x(1, 0) * x(0, 1); }},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    GenerationOptions o;
    o.d = c.d;
    o.n = c.n;
    o.sample_count = 500;
    const GenerationFit fit = generation_oracle(c.f, o);
    ok = ok && fit.max_residual <= 1e-8;
    detail += (detail.empty() ? "" : ", ") + c.name + ": " + fmt("%.3g", fit.max_residual);
  }
  return {ok, detail + " (tol 1e-8, 500 samples)"};
}

Outcome discrete() {
  const TargetFunction t = square_rest_target();
  const double lipschitz = std::sqrt(5.0);
  bool ok = true;
  std::map<int, double> err;
  std::string detail;
  for (int delta : {4, 8, 16}) {
    const DiscreteSumformer s = build_discrete_sumformer(t, delta, 2, 1);
    err[delta] = sup_error([&](const Matrix& x) { return s.forward(x); }, t, 2, 1, 1000, 0);
    const double bound = lipschitz / delta * std::sqrt(2.0);
    ok = ok && err[delta] <= bound;
    detail += "D=" + std::to_string(delta) + ": " + fmt("%.4f", err[delta]) + " <= " + fmt("%.4f", bound) + "; ";
  }
  const double ratio = err[8] / err[4];
  ok = ok && ratio <= 0.8;
  return {ok, detail + "err(8)/err(4) = " + fmt("%.3f", ratio) + " (<= 0.8)"};
}

Outcome gradients() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    worst = std::max(worst, check_mlp_gradient(seed).relative_error);
  }
  return {worst <= 1e-5, "100 seeds, max relative error " + fmt("%.3g", worst) + " (tol 1e-5)"};
}

Outcome training() {
  const auto t0 = Clock::now();
  const TargetFunction target = cubic_interaction_target();
  ExperimentConfig base;  // n=3, d=2, d'=32, 2000 points, 200 epochs
  std::map<std::tuple<Eigen::Index, Eigen::Index, std::uint64_t>, double> cache;
  auto run = [&](Eigen::Index d, Eigen::Index dp, std::uint64_t seed) {
    const auto key = std::make_tuple(d, dp, seed);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    ExperimentConfig c = base;
    c.d = d;
    c.d_latent = dp;
    return cache[key] = run_experiment(target, c, seed).best_validation_error;
  };

  int good = 0;
  std::string errs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double e = run(2, 32, seed);
    if (e <= 0.1) ++good;
    errs += (errs.empty() ? "" : " ") + fmt("%.3f", e);
  }
  const double seed_secs = seconds_since(t0);
  std::printf("  seeds 0-9 best val rel-L2: %s (%.0f s)\n", errs.c_str(), seed_secs);

  const std::vector<Eigen::Index> dprimes{2, 8, 32, 128};
  bool monotone = true;
  std::string sweep;
  for (Eigen::Index d = 1; d <= 4; ++d) {
    std::vector<double> means;
    for (Eigen::Index dp : dprimes) means.push_back(0.5 * (run(d, dp, 0) + run(d, dp, 1)));
    int inversions = 0;
    for (std::size_t i = 1; i < means.size(); ++i) inversions += means[i] > means[i - 1];
    monotone = monotone && inversions <= 1;
    std::printf("  d=%ld mean best error over d' {2,8,32,128}: %.4f %.4f %.4f %.4f (%d inversions)\n",
                long(d), means[0], means[1], means[2], means[3], inversions);
    sweep += "d=" + std::to_string(d) + ":" + std::to_string(inversions) + " ";
  }
  const double secs = seconds_since(t0);
  return {good >= 8 && monotone && secs < 15 * 60,
          std::to_string(good) + "/10 seeds <= 0.1; sweep inversions " + sweep + "(<= 1 each); " +
              fmt("%.0f", secs) + " s (limit 900 s)"};
}

Outcome bench() {
  const std::vector<std::uint64_t> ns{32, 64, 128, 256};
  const std::uint64_t m = 2, k = 8;
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(0);
  std::normal_distribution<double> g(0.0, 0.5);
  auto gauss = [&](Eigen::Index r, Eigen::Index c) { return Matrix(Matrix::NullaryExpr(r, c, [&] { return g(rng); })); };
  for (auto v : {AttentionVariant::Standard, AttentionVariant::Linformer, AttentionVariant::Performer}) {
    const double lo = v == AttentionVariant::Standard ? 3.6 : 1.8;
    const double hi = v == AttentionVariant::Standard ? 4.4 : 2.2;
    detail += to_string(v) + ":";
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const Eigen::Index n = Eigen::Index(ns[i]);
      // Formula must agree with a counted forward pass.
      HeadWeights w{gauss(m, m), gauss(m, m), gauss(m, m)};
      AttentionHead head = StandardHead{w};
      if (v == AttentionVariant::Linformer) head = LinformerHead{w, gauss(k, n), gauss(k, n)};
      if (v == AttentionVariant::Performer) head = PerformerHead{w, gauss(k, m)};
      MacCounter counter;
      head_forward(gauss(n, m), head, &counter);
      ok = ok && counter.macs == mac_count(v, ns[i], m, k);
      if (i == 0) continue;
      const double r = double(mac_count(v, ns[i], m, k)) / double(mac_count(v, ns[i - 1], m, k));
      ok = ok && r >= lo && r <= hi;
      detail += " " + fmt("%.3f", r);
    }
    detail += "; ";
  }
  return {ok, detail + "counted MACs match the formula"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"standard attention sum recovery", standard_recovery},
      {"linformer sum recovery", linformer_recovery},
      {"performer sum recovery", performer_recovery},
      {"averaging attention", averaging_attention},
      {"permutation equivariance", equivariance},
      {"latent dimension count", latent_counts},
      {"generation oracle", generation},
      {"discrete construction", discrete},
      {"gradient check", gradients},
      {"training surrogate", training},
      {"attention MAC scaling", bench},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "posbias/biasmetrics.hpp"
#include "posbias/cli.hpp"
#include "posbias/llmclient.hpp"
#include "posbias/posmap.hpp"
#include "posbias/seeding.hpp"
#include "posbias/simmetrics.hpp"
#include "rouge_golden.hpp"
#include "test_support.hpp"
#include "transport_oracle.hpp"

namespace {

using namespace posbias;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (status != 0) std::cerr << err.str();
  return status;
}

// Independent partition check: coverage marks, size classes and ordering.
bool partition_ok(std::size_t n, std::size_t k, const SegmentationPlan& plan) {
  if (plan.intervals.size() != k) return false;
  const std::size_t c = n / k, d = n % k;
  std::vector<int> cover(n, 0);
  std::size_t oversized = 0;
  bool base_seen = false;
  for (const auto& iv : plan.intervals) {
    if (iv.first > iv.last || iv.last >= n) return false;
    for (auto i = iv.first; i <= iv.last; ++i) ++cover[i];
    const auto len = iv.last - iv.first + 1;
    if (len == c + 1) {
      if (base_seen) return false;
      ++oversized;
    } else if (len == c) {
      base_seen = true;
    } else {
      return false;
    }
  }
  for (int count : cover) {
    if (count != 1) return false;
  }
  return oversized == d;
}

Verdict criterion1() {
  const auto start = Clock::now();
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 500; ++n) {
    for (std::size_t k = 1; k <= n; ++k) {
      if (!partition_ok(n, k, segment_article(n, k))) return {false, fmt::format("bad partition at n={}, k={}", n, k)};
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  return {elapsed < 5.0, fmt::format("{} (n, k) pairs exact, {:.2f} s (limit 5 s)", checked, elapsed)};
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(0.25);
  std::vector<double> m(k);
  double total = 0.0;
  for (auto& v : m) total += v = zero(rng) ? 0.0 : e(rng);
  if (total == 0.0) m[0] = total = 1.0;
  for (auto& v : m) v /= total;
  return m;
}

PositionalDistribution as_distribution(std::vector<double> mass) {
  PositionalDistribution d;
  d.k = mass.size();
  d.mass = std::move(mass);
  d.support = support_positions(d.k, BinPositions::normalized);
  return d;
}

Verdict criterion2() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> k_dist(2, 10);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto k = k_dist(rng);
    const auto p = as_distribution(random_simplex(rng, k)), q = as_distribution(random_simplex(rng, k));
    worst = std::max(worst, std::abs(wasserstein1(p, q) - testing::min_cost_transport(p.mass, q.mass, p.support)));
  }
  std::size_t axiom_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto k = k_dist(rng);
    const auto p = as_distribution(random_simplex(rng, k)), q = as_distribution(random_simplex(rng, k)),
               r = as_distribution(random_simplex(rng, k));
    const double pq = wasserstein1(p, q), qp = wasserstein1(q, p);
    if (pq != qp) ++axiom_failures;
    if (wasserstein1(p, r) > pq + wasserstein1(q, r) + 1e-12) ++axiom_failures;
    if (wasserstein1(p, p) != 0.0 || pq < 0.0) ++axiom_failures;
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && axiom_failures == 0 && elapsed < 10.0,
          fmt::format("max |W - flow| = {:.3e} over 1000 pairs, {} axiom violations over 1000 triples, {:.2f} s", worst,
                      axiom_failures, elapsed)};
}

Verdict criterion3() {
  const std::vector<double> x{1, 2, 3, 4, 5};
  struct Case {
    int sum_d2;
    std::vector<double> y;
    double rho;
    Significance stars;
  };
  const std::vector<Case> cases{{0, {1, 2, 3, 4, 5}, 1.0, Significance::two},
                                {2, {2, 1, 3, 4, 5}, 0.9, Significance::two},
                                {4, {2, 1, 4, 3, 5}, 0.8, Significance::one},
                                {10, {3, 2, 1, 5, 4}, 0.5, Significance::none},
                                {14, {4, 2, 1, 3, 5}, 0.3, Significance::none}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    int d2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += static_cast<int>((x[i] - c.y[i]) * (x[i] - c.y[i]));
    const auto r = spearman(x, c.y);
    pass = pass && d2 == c.sum_d2 && r.rho == c.rho && r.stars == c.stars;
    detail += fmt::format("{}{:.1f}{} (p={:.4f})", detail.empty() ? "" : ", ", r.rho, stars_text(r.stars), r.p_value);
  }
  return {pass, detail};
}

const char* kPointMassSpec =
    "num_articles = 1000\n"
    "sentences_per_article = 20\n"
    "k = 10\n"
    "gold_target = 0,0,0,0,0,0,0,0,0,1\n"
    "model.lead = 1,0,0,0,0,0,0,0,0,0\n"
    "allocation = deterministic\n"
    "seed = 7\n";

Verdict criterion4(const testing::TempDir& dir) {
  const auto start = Clock::now();
  testing::spit(dir / "c4.conf", kPointMassSpec);
  if (run_cli({"synth", "--spec", (dir / "c4.conf").string(), "--out", (dir / "c4.jsonl").string()}) != 0) {
    return {false, "synth failed"};
  }
  if (run_cli({"--out-dir", (dir / "c4").string(), "analyze", (dir / "c4.jsonl").string()}) != 0) {
    return {false, "analyze failed"};
  }
  const auto elapsed = seconds_since(start);
  const auto text = testing::slurp(dir / "c4" / cli::kAnalysisJson);
  const auto json = nlohmann::json::parse(text);
  const auto& m = json["models"][0];
  const bool w_exact = text.find("\"wasserstein\": 0.900000") != std::string::npos;
  const bool pass = w_exact && m["name"] == "lead" && m["unmapped_fraction"].get<double>() == 0.0 &&
                    json["gold_distribution"]["unmapped_fraction"].get<double>() == 0.0 &&
                    m["lead_bias_fraction"].get<double>() == 1.0 &&
                    json["gold_distribution"]["lead_bias_fraction"].get<double>() == 0.0 && json["config"]["k_prime"] == 3 &&
                    elapsed < 30.0;
  return {pass, fmt::format("W = {}, unmapped {} / {}, lead@3 model {} gold {}, {:.2f} s",
                            format_real(m["wasserstein"]), format_real(m["unmapped_fraction"]),
                            format_real(json["gold_distribution"]["unmapped_fraction"]),
                            format_real(m["lead_bias_fraction"]),
                            format_real(json["gold_distribution"]["lead_bias_fraction"]), elapsed)};
}

Verdict criterion5(const testing::TempDir& dir) {
  const auto start = Clock::now();
  testing::spit(dir / "c5.conf",
                "num_articles = 1000\n"
                "sentences_per_article = 20\n"
                "k = 10\n"
                "gold_target = 0.05,0.05,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.2\n"
                "model.llm = 0.3,0.2,0.1,0.1,0.05,0.05,0.05,0.05,0.05,0.05\n"
                "allocation = seeded_random\n"
                "summary_sentences_per_article = 2\n"
                "noise_words_per_sentence = 3\n"
                "noise_pool_size = 8\n"
                "token_dropout = 0.2\n"
                "seed = 11\n");
  if (run_cli({"synth", "--spec", (dir / "c5.conf").string(), "--out", (dir / "c5.jsonl").string()}) != 0) {
    return {false, "synth failed"};
  }
  std::map<std::string, double> w;
  for (const char* phi : {"tfidf", "rouge1"}) {
    const auto out = dir / (std::string("c5-") + phi);
    if (run_cli({"--out-dir", out.string(), "analyze", "--phi", phi, (dir / "c5.jsonl").string()}) != 0) {
      return {false, fmt::format("analyze --phi {} failed", phi)};
    }
    w[phi] = nlohmann::json::parse(testing::slurp(out / cli::kAnalysisJson))["models"][0]["wasserstein"];
  }
  const double delta = std::abs(w["tfidf"] - w["rouge1"]);
  const double elapsed = seconds_since(start);
  return {delta <= 0.01 && elapsed < 60.0,
          fmt::format("W tfidf = {:.6f}, W rouge1 = {:.6f}, |delta| = {:.6f} (limit 0.01), {:.2f} s", w["tfidf"],
                      w["rouge1"], delta, elapsed)};
}

Verdict criterion6() {
  double worst = 0.0;
  std::size_t cases = 0;
  bool has_partial_recall_case = false;
  for (const auto& c : testing::rouge_golden_cases()) {
    worst = std::max({worst, std::abs(rouge_n(c.candidate, c.reference, 1) - c.r1),
                      std::abs(rouge_n(c.candidate, c.reference, 2) - c.r2),
                      std::abs(rouge_l(c.candidate, c.reference) - c.rl)});
    has_partial_recall_case = has_partial_recall_case || (c.candidate == TokenList{"the", "cat"} && c.r1 == 0.8);
    ++cases;
  }
  return {worst <= 1e-12 && cases == 10 && has_partial_recall_case,
          fmt::format("{} golden cases, max abs error {:.3e} (limit 1e-12)", cases, worst)};
}

Verdict criterion7() {
  const std::vector<std::string> sentences{"First.", "Second.", "Third."};
  std::map<std::string, int> counts;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) ++counts[subsample_sentences(sentences, 1, derive_seed(2024, t))[0]];
  bool pass = true;
  std::string detail;
  for (const auto& s : sentences) {
    const double f = counts[s] / static_cast<double>(trials);
    pass = pass && std::abs(f - 1.0 / 3.0) <= 0.02;
    detail += fmt::format("{}{} {:.4f}", detail.empty() ? "" : ", ", s, f);
  }
  return {pass, detail + " (target 0.3333 +/- 0.02)"};
}

Verdict criterion8(const testing::TempDir& dir) {
  // Reuses the corpus written for criterion 4.
  for (const char* workers : {"1", "8"}) {
    if (run_cli({"--workers", workers, "--out-dir", (dir / (std::string("c8-w") + workers)).string(), "analyze",
                 (dir / "c4.jsonl").string()}) != 0) {
      return {false, fmt::format("analyze --workers {} failed", workers)};
    }
  }
  std::size_t identical = 0;
  const std::vector<std::string> files{cli::kAnalysisJson, "distributions.csv", "metrics.csv", "correlations.csv",
                                       cli::kDistributionSvg, cli::kBiasBarsSvg};
  for (const auto& file : files) {
    const auto a = testing::slurp(dir / "c8-w1" / file), b = testing::slurp(dir / "c8-w8" / file);
    if (!a.empty() && a == b) ++identical;
  }
  return {identical == files.size(), fmt::format("{}/{} output files byte-identical", identical, files.size())};
}

Verdict criterion9(const testing::TempDir& dir) {
  testing::spit(dir / "c9.conf",
                "num_articles = 10000\n"
                "sentences_per_article = 20\n"
                "k = 10\n"
                "gold_target = 0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1\n"
                "model.a = 0.4,0.2,0.1,0.1,0.05,0.05,0.05,0.02,0.02,0.01\n"
                "summary_sentences_per_article = 3\n"
                "seed = 9\n");
  if (run_cli({"synth", "--spec", (dir / "c9.conf").string(), "--out", (dir / "c9.jsonl").string()}) != 0) {
    return {false, "synth failed"};
  }
  const auto start = Clock::now();
  if (run_cli({"--out-dir", (dir / "c9").string(), "analyze", (dir / "c9.jsonl").string()}) != 0) {
    return {false, "analyze failed"};
  }
  const double elapsed = seconds_since(start);
  return {elapsed < 60.0, fmt::format("10000 articles x 20 sentences, 3 summary sentences: {:.2f} s (limit 60 s)",
                                      elapsed)};
}

}  // namespace

int main() {
  posbias::testing::TempDir dir;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"segmentation partition oracle", criterion1},
      {"wasserstein vs min-cost transport", criterion2},
      {"spearman star pattern, n = 5", criterion3},
      {"synthetic end-to-end recovery", [&] { return criterion4(dir); }},
      {"mapping-function robustness", [&] { return criterion5(dir); }},
      {"rouge golden fixture", criterion6},
      {"subsampling uniformity", criterion7},
      {"worker-count determinism", [&] { return criterion8(dir); }},
      {"throughput", [&] { return criterion9(dir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << fmt::format("criterion {}: {} {}: {}\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                             v.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

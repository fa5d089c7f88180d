#include <catch_amalgamated.hpp>

#include "sparse_tda/linear.hpp"

using namespace sparse_tda;

namespace {

// Coordinate 0 carries the class; the rest is noise.
LabeledSet one_informative(std::size_t n, std::size_t noise, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet out;
  for (std::size_t t = 0; t < n; ++t) {
    const int label = static_cast<int>(t % 2);
    std::vector<double> v{(label ? 1.0 : -1.0) + rng.normal(0, 0.2)};
    for (std::size_t k = 0; k < noise; ++k) v.push_back(rng.normal());
    out.vectors.push_back(v);
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace

TEST_CASE("one discriminative coordinate", "[linear]") {
  const auto data = one_informative(60, 20, 3);
  const auto m = train_l1(data, 0.5);
  REQUIRE(m.weights.size() == 2);
  for (const auto& w : m.weights) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < w.size(); ++j)
      if (std::abs(w[j]) > std::abs(w[arg])) arg = j;
    REQUIRE(arg == 0);
    const auto zeros = std::count(w.begin() + 1, w.end(), 0.0);
    REQUIRE(zeros >= 10);
  }
  std::size_t correct = 0;
  for (std::size_t t = 0; t < data.size(); ++t) correct += predict(m, data.vectors[t]) == data.labels[t];
  REQUIRE(correct >= 58);
}

TEST_CASE("tiny C zeroes every weight", "[linear]") {
  const auto data = one_informative(40, 5, 8);
  const auto m = train_l1(data, 1e-6);
  for (const auto& w : m.weights)
    for (double v : w) REQUIRE(v == 0.0);
  REQUIRE(m.zero_count() == 2 * 6);
}

TEST_CASE("coordinate descent never increases the objective", "[linear][property]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = one_informative(50, 15, seed);
    L1Options opt;
    opt.record_objective = true;
    opt.tol = 1e-8;
    const auto m = train_l1(data, std::exp2(static_cast<double>(seed) - 2.0), opt);
    for (const auto& fit : m.fits) {
      REQUIRE(fit.objective_trace.size() >= 2);
      for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
        REQUIRE(fit.objective_trace[k] <= fit.objective_trace[k - 1]);
    }
  }
}

TEST_CASE("three classes one-vs-rest", "[linear]") {
  Rng rng(5);
  LabeledSet data;
  const std::vector<std::vector<double>> centres{{3, 0}, {-3, 0}, {0, 3}};
  for (int rep = 0; rep < 15; ++rep)
    for (std::size_t k = 0; k < 3; ++k) {
      data.vectors.push_back({centres[k][0] + rng.normal(0, 0.3), centres[k][1] + rng.normal(0, 0.3)});
      data.labels.push_back(static_cast<int>(k) + 7);
    }
  const auto m = train_l1(data, 1.0);
  REQUIRE(m.classes == std::vector<int>{7, 8, 9});
  for (std::size_t t = 0; t < data.size(); ++t) REQUIRE(predict(m, data.vectors[t]) == data.labels[t]);
  REQUIRE_THROWS_AS(predict(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("cost tuning", "[linear][cv]") {
  const auto data = one_informative(40, 10, 12);
  const auto grid = linspace(-5, 5, 6);
  const auto a = tune_l1(data, grid, 4, 99), b = tune_l1(data, grid, 4, 99);
  REQUIRE(a.c == b.c);
  REQUIRE(a.correct == b.correct);
  REQUIRE(a.cv_accuracy >= 0.9);
  const auto best = std::max_element(a.correct.begin(), a.correct.end());
  REQUIRE(std::exp2(a.log2_c[static_cast<std::size_t>(best - a.correct.begin())]) == a.c);
}

TEST_CASE("sweep cap raises a convergence error", "[linear]") {
  const auto data = one_informative(40, 10, 1);
  L1Options opt;
  opt.tol = 1e-14;
  opt.max_sweeps = 2;
  try {
    train_l1(data, 100.0, opt);
    FAIL("expected a convergence error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::convergence);
    REQUIRE(std::string(e.what()).find("gap") != std::string::npos);
  }
}

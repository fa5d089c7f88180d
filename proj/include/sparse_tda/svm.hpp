#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_tda/error.hpp"
#include "sparse_tda/random.hpp"
#include "sparse_tda/sparse.hpp"

namespace sparse_tda {

/// Equal-length feature vectors with integer class labels.
struct LabeledSet {
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;

  std::size_t size() const noexcept { return vectors.size(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }

  std::vector<int> classes() const {
    std::vector<int> c(labels);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  }

  void validate() const {
    require(vectors.size() == labels.size(), "vector and label counts differ");
    require(vectors.size() >= 2, "labeled set needs at least two samples");
    require(classes().size() >= 2, "labeled set needs at least two classes");
    const std::size_t d = dim();
    for (const auto& v : vectors) {
      require(v.size() == d, "feature vectors differ in length");
      for (double e : v) require(std::isfinite(e), "feature values must be finite");
    }
  }
};

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

inline double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  require(x.size() == y.size(), "rbf_kernel: vector lengths differ");
  require(gamma > 0.0, "rbf_kernel: gamma must be positive");
  return std::exp(-gamma * squared_distance(x, y));
}

/// Row-major n x n Gram matrix.
inline std::vector<double> rbf_gram(const std::vector<std::vector<double>>& xs, double gamma) {
  const std::size_t n = xs.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) k[i * n + j] = k[j * n + i] = std::exp(-gamma * squared_distance(xs[i], xs[j]));
  }
  return k;
}

struct SmoOptions {
  double tol = 1e-3;
  std::size_t max_iterations = 1'000'000;
  bool record_objective = false;
};

struct BinarySolution {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
  double violation = 0.0;                // final maximal KKT violation m(a) - M(a)
  std::vector<double> objective_trace;   // dual objective per iteration when recorded
};

/// SMO on the C-SVC dual
///   max  sum(a) - 1/2 a^T Q a,  Q_ij = y_i y_j K_ij,  0 <= a <= C,  y^T a = 0
/// with maximal-violating-pair working set selection. `kernel` is the
/// row-major n x n Gram matrix of the subproblem.
inline BinarySolution solve_binary(std::span<const double> kernel, std::span<const int> y, double c,
                                   const SmoOptions& opt = {}) {
  const std::size_t n = y.size();
  require(kernel.size() == n * n, "kernel size does not match label count");
  require(c > 0.0, "C must be positive");
  constexpr double tau = 1e-12;
  const auto q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * kernel[i * n + j]; };

  BinarySolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = sol.alpha;

  // a^T Q a = a^T (grad + 1), so the objective is 1/2 sum(a_t (1 - grad_t)).
  const auto objective = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (1.0 - grad[t]);
    return 0.5 * s;
  };
  const auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0); };
  const auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < c); };

  if (opt.record_objective) sol.objective_trace.push_back(0.0);
  while (true) {
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.violation = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (i == n || j == n || sol.violation <= opt.tol) break;
    if (sol.iterations >= opt.max_iterations)
      fail(ErrorKind::convergence, "SMO hit the iteration cap (" + std::to_string(opt.max_iterations) +
                                       ") with KKT violation " + std::to_string(sol.violation));
    ++sol.iterations;

    const double old_i = alpha[i], old_j = alpha[j];
    double ai = old_i, aj = old_j;
    if (y[i] != y[j]) {
      double quad = kernel[i * n + i] + kernel[j * n + j] + 2.0 * q(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      double quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * q(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    alpha[i] = std::clamp(ai, 0.0, c);
    alpha[j] = std::clamp(aj, 0.0, c);
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
    if (opt.record_objective) sol.objective_trace.push_back(objective());
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t nr_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++nr_free;
      sum_free += yg;
    }
  }
  sol.rho = nr_free > 0 ? sum_free / static_cast<double>(nr_free) : 0.5 * (ub + lb);
  return sol;
}

/// Dual objective sum(a) - 1/2 a^T Q a, evaluated directly.
inline double dual_objective(std::span<const double> kernel, std::span<const int> y, std::span<const double> alpha) {
  const std::size_t n = y.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
  }
  return lin - 0.5 * quad;
}

namespace detail {

// One one-vs-one subproblem solved over a subset of a shared Gram matrix.
struct PairFit {
  int positive = 0;  // label mapped to y = +1
  int negative = 0;
  std::vector<std::size_t> members;  // indices into the shared sample list
  std::vector<double> coef;          // y_t * alpha_t per member
  std::vector<double> alpha;
  std::vector<int> y;
  double rho = 0.0;
  std::size_t iterations = 0;
  double violation = 0.0;
  std::vector<double> objective_trace;
};

inline std::vector<PairFit> fit_pairs(std::span<const double> gram, std::size_t n, std::span<const int> labels,
                                      std::span<const std::size_t> subset, std::span<const int> classes, double c,
                                      const SmoOptions& opt) {
  std::vector<PairFit> fits;
  std::vector<double> local;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      PairFit fit;
      fit.positive = classes[a];
      fit.negative = classes[b];
      for (std::size_t idx : subset) {
        if (labels[idx] == fit.positive) {
          fit.members.push_back(idx);
          fit.y.push_back(+1);
        } else if (labels[idx] == fit.negative) {
          fit.members.push_back(idx);
          fit.y.push_back(-1);
        }
      }
      const std::size_t m = fit.members.size();
      local.assign(m * m, 0.0);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t s = 0; s < m; ++s) local[r * m + s] = gram[fit.members[r] * n + fit.members[s]];
      auto sol = solve_binary(local, fit.y, c, opt);
      fit.alpha = std::move(sol.alpha);
      fit.coef.resize(m);
      for (std::size_t r = 0; r < m; ++r) fit.coef[r] = fit.y[r] * fit.alpha[r];
      fit.rho = sol.rho;
      fit.iterations = sol.iterations;
      fit.violation = sol.violation;
      fit.objective_trace = std::move(sol.objective_trace);
      fits.push_back(std::move(fit));
    }
  }
  return fits;
}

// Majority vote; ties go to the lowest class id.
inline int vote(std::span<const int> classes, const std::vector<int>& winners) {
  std::map<int, int> counts;
  for (int c : classes) counts[c] = 0;
  for (int w : winners) ++counts[w];
  int best = classes.front(), best_count = -1;
  for (const auto& [label, count] : counts)
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  return best;
}

// kernel_row(idx) gives K(x_idx, probe) for a shared-sample index.
template <typename KernelRow>
int predict_pairs(const std::vector<PairFit>& fits, std::span<const int> classes, KernelRow&& kernel_row) {
  std::vector<int> winners;
  winners.reserve(fits.size());
  for (const auto& f : fits) {
    double dec = -f.rho;
    for (std::size_t r = 0; r < f.members.size(); ++r)
      if (f.coef[r] != 0.0) dec += f.coef[r] * kernel_row(f.members[r]);
    winners.push_back(dec > 0.0 ? f.positive : f.negative);
  }
  return vote(classes, winners);
}

}  // namespace detail

struct PairModel {
  int positive = 0;
  int negative = 0;
  std::vector<std::size_t> support;  // indices into SvmModel::support_vectors
  std::vector<double> alpha;         // in [0, C]
  std::vector<int> y;                // +1 for `positive`, -1 for `negative`
  double rho = 0.0;
  std::size_t iterations = 0;
  double violation = 0.0;
  std::vector<double> objective_trace;
};

/// One-vs-one RBF C-SVC.
struct SvmModel {
  double c = 1.0;
  double gamma = 1.0;
  std::size_t dim = 0;
  std::vector<int> classes;
  std::vector<std::vector<double>> support_vectors;
  std::vector<std::size_t> support_source;  // training index of each support vector
  std::vector<PairModel> pairs;

  double max_violation() const {
    double v = 0.0;
    for (const auto& p : pairs) v = std::max(v, p.violation);
    return v;
  }

  void validate() const {
    require(c > 0.0 && std::isfinite(c), "model C must be positive");
    require(gamma > 0.0 && std::isfinite(gamma), "model gamma must be positive");
    require(classes.size() >= 2, "model needs at least two classes");
    require(pairs.size() == classes.size() * (classes.size() - 1) / 2, "model pair count mismatch");
    for (const auto& sv : support_vectors) require(sv.size() == dim, "support vector length mismatch");
    for (const auto& p : pairs) {
      require(p.support.size() == p.alpha.size() && p.alpha.size() == p.y.size(), "pair model arrays differ in length");
      for (std::size_t k = 0; k < p.alpha.size(); ++k) {
        require(p.support[k] < support_vectors.size(), "support index out of range");
        require(p.alpha[k] >= 0.0 && p.alpha[k] <= c, "dual coefficient outside [0, C]");
        require(p.y[k] == 1 || p.y[k] == -1, "support label sign must be +1 or -1");
      }
    }
  }
};

inline SvmModel train_csvc(const LabeledSet& data, double c, double gamma, const SmoOptions& opt = {}) {
  data.validate();
  require(c > 0.0 && std::isfinite(c), "C must be positive");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  const std::size_t n = data.size();
  const auto gram = rbf_gram(data.vectors, gamma);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  SvmModel model;
  model.c = c;
  model.gamma = gamma;
  model.dim = data.dim();
  model.classes = data.classes();
  auto fits = detail::fit_pairs(gram, n, data.labels, all, model.classes, c, opt);

  std::vector<char> used(n, 0);
  for (const auto& f : fits)
    for (std::size_t r = 0; r < f.members.size(); ++r)
      if (f.alpha[r] > 0.0) used[f.members[r]] = 1;
  std::vector<std::size_t> slot(n, 0);
  for (std::size_t t = 0; t < n; ++t)
    if (used[t]) {
      slot[t] = model.support_vectors.size();
      model.support_vectors.push_back(data.vectors[t]);
      model.support_source.push_back(t);
    }
  for (auto& f : fits) {
    PairModel pm;
    pm.positive = f.positive;
    pm.negative = f.negative;
    for (std::size_t r = 0; r < f.members.size(); ++r) {
      if (f.alpha[r] <= 0.0) continue;
      pm.support.push_back(slot[f.members[r]]);
      pm.alpha.push_back(f.alpha[r]);
      pm.y.push_back(f.y[r]);
    }
    pm.rho = f.rho;
    pm.iterations = f.iterations;
    pm.violation = f.violation;
    pm.objective_trace = std::move(f.objective_trace);
    model.pairs.push_back(std::move(pm));
  }
  return model;
}

/// Decision value of every class pair, in model pair order.
inline std::vector<double> decision_values(const SvmModel& model, std::span<const double> x) {
  require(x.size() == model.dim, "feature vector length does not match model");
  std::vector<double> kv(model.support_vectors.size());
  for (std::size_t k = 0; k < kv.size(); ++k) kv[k] = std::exp(-model.gamma * squared_distance(model.support_vectors[k], x));
  std::vector<double> out;
  out.reserve(model.pairs.size());
  for (const auto& p : model.pairs) {
    double dec = -p.rho;
    for (std::size_t r = 0; r < p.support.size(); ++r) dec += p.y[r] * p.alpha[r] * kv[p.support[r]];
    out.push_back(dec);
  }
  return out;
}

inline int predict(const SvmModel& model, std::span<const double> x) {
  const auto dec = decision_values(model, x);
  std::vector<int> winners;
  winners.reserve(dec.size());
  for (std::size_t k = 0; k < dec.size(); ++k)
    winners.push_back(dec[k] > 0.0 ? model.pairs[k].positive : model.pairs[k].negative);
  return detail::vote(model.classes, winners);
}

/// Stratified fold assignment: each class's members are shuffled and dealt
/// round-robin, continuing the deal across classes so fold sizes stay
/// balanced.
inline std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  require(folds >= 2, "cross-validation needs at least two folds");
  if (labels.size() < folds)
    fail(ErrorKind::configuration, "fewer samples (" + std::to_string(labels.size()) + ") than folds (" +
                                       std::to_string(folds) + ")");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  Rng rng(seed);
  std::vector<std::size_t> assignment(labels.size(), 0);
  std::size_t deal = 0;
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t t = 0; t < labels.size(); ++t)
      if (labels[t] == c) members.push_back(t);
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) assignment[idx] = deal++ % folds;
  }

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<int> train_classes;
    bool nonempty = false;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (assignment[t] == f) nonempty = true;
      else if (std::find(train_classes.begin(), train_classes.end(), labels[t]) == train_classes.end())
        train_classes.push_back(labels[t]);
    }
    if (!nonempty) fail(ErrorKind::configuration, "fold " + std::to_string(f) + " is empty");
    if (train_classes.size() < 2)
      fail(ErrorKind::configuration, "training part of fold " + std::to_string(f) + " has a single class");
  }
  return assignment;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  return out;
}

/// Exponents (base 2) of one grid-search stage.
struct GridStage {
  std::vector<double> log2_c;
  std::vector<double> log2_gamma;

  std::size_t size() const noexcept { return log2_c.size() * log2_gamma.size(); }
};

/// Coarse stage plus the shape of the refinement around its winner.
struct GridSearchSpec {
  GridStage coarse{linspace(-5.0, 13.0, 5), linspace(-15.0, 3.0, 10)};
  double fine_half_width = 2.0;  // exponent units on each side of the coarse winner
  std::size_t fine_c_count = 5;
  std::size_t fine_gamma_count = 10;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  SmoOptions smo{};

  GridStage fine_around(double log2_c, double log2_gamma) const {
    return {linspace(log2_c - fine_half_width, log2_c + fine_half_width, fine_c_count),
            linspace(log2_gamma - fine_half_width, log2_gamma + fine_half_width, fine_gamma_count)};
  }
};

struct GridPoint {
  double log2_c = 0.0;
  double log2_gamma = 0.0;
  std::size_t correct = 0;
  bool converged = true;
};

struct GridSearchResult {
  double c = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
  std::vector<std::size_t> folds;
  std::vector<GridPoint> coarse;
  std::vector<GridPoint> fine;
};

namespace detail {

inline bool better_point(const GridPoint& a, const GridPoint& b) {
  if (a.converged != b.converged) return a.converged;
  if (a.correct != b.correct) return a.correct > b.correct;
  if (a.log2_c != b.log2_c) return a.log2_c < b.log2_c;
  return a.log2_gamma < b.log2_gamma;
}

inline std::vector<GridPoint> evaluate_stage(const LabeledSet& data, std::span<const std::size_t> folds,
                                             std::size_t fold_count, const GridStage& stage, const SmoOptions& opt) {
  const std::size_t n = data.size();
  const auto classes = data.classes();
  std::vector<std::vector<std::size_t>> train(fold_count), test(fold_count);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t f = 0; f < fold_count; ++f) (folds[t] == f ? test[f] : train[f]).push_back(t);

  std::vector<GridPoint> points;
  for (double lg : stage.log2_gamma) {
    const auto gram = rbf_gram(data.vectors, std::exp2(lg));
    for (double lc : stage.log2_c) {
      GridPoint pt{lc, lg, 0, true};
      try {
        for (std::size_t f = 0; f < fold_count; ++f) {
          const auto fits = fit_pairs(gram, n, data.labels, train[f], classes, std::exp2(lc), opt);
          for (std::size_t idx : test[f]) {
            const int guess = predict_pairs(fits, classes, [&](std::size_t m) { return gram[m * n + idx]; });
            if (guess == data.labels[idx]) ++pt.correct;
          }
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::convergence) throw;
        pt.converged = false;
        pt.correct = 0;
      }
      points.push_back(pt);
    }
  }
  // Report in C-major order regardless of the gamma-major evaluation order.
  std::stable_sort(points.begin(), points.end(), [](const GridPoint& a, const GridPoint& b) {
    return a.log2_c < b.log2_c || (a.log2_c == b.log2_c && a.log2_gamma < b.log2_gamma);
  });
  return points;
}

inline const GridPoint& best_of(const std::vector<GridPoint>& points) {
  const GridPoint* best = &points.front();
  for (const auto& p : points)
    if (better_point(p, *best)) best = &p;
  return *best;
}

}  // namespace detail

/// Two-stage cross-validated search over (C, gamma): a coarse exponential
/// grid, then a finer grid centred on the coarse winner. The result is the
/// best point over both stages; ties prefer smaller C, then smaller gamma.
inline GridSearchResult grid_search(const LabeledSet& data, const GridSearchSpec& spec) {
  data.validate();
  require(spec.coarse.size() >= 1, "coarse grid is empty");
  GridSearchResult out;
  out.folds = stratified_folds(data.labels, spec.folds, spec.seed);
  out.coarse = detail::evaluate_stage(data, out.folds, spec.folds, spec.coarse, spec.smo);
  const GridPoint coarse_best = detail::best_of(out.coarse);
  out.fine = detail::evaluate_stage(data, out.folds, spec.folds,
                                    spec.fine_around(coarse_best.log2_c, coarse_best.log2_gamma), spec.smo);
  GridPoint best = coarse_best;
  if (const auto& fb = detail::best_of(out.fine); detail::better_point(fb, best)) best = fb;
  if (!best.converged) fail(ErrorKind::convergence, "no grid point converged");
  out.c = std::exp2(best.log2_c);
  out.gamma = std::exp2(best.log2_gamma);
  out.cv_accuracy = static_cast<double>(best.correct) / static_cast<double>(data.size());
  return out;
}

inline constexpr std::uint16_t model_format_version = 1;

// Layout (little-endian): "STDM", u16 version, f64 gamma, f64 C, u32 dim,
// u32 class count, i32 classes[], u32 support count, f64 support[count*dim],
// then per pair: i32 positive, i32 negative, f64 rho, u32 m,
// m x (u32 support index, f64 alpha, i8 y).
inline void write_model(std::ostream& out, const SvmModel& m) {
  m.validate();
  detail::LeWriter w(out);
  w.bytes("STDM", 4);
  w.integer<std::uint16_t>(model_format_version);
  w.real(m.gamma);
  w.real(m.c);
  w.integer(detail::checked_u32(m.dim));
  w.integer(detail::checked_u32(m.classes.size()));
  for (int c : m.classes) w.integer<std::int32_t>(c);
  w.integer(detail::checked_u32(m.support_vectors.size()));
  for (const auto& sv : m.support_vectors)
    for (double v : sv) w.real(v);
  for (const auto& p : m.pairs) {
    w.integer<std::int32_t>(p.positive);
    w.integer<std::int32_t>(p.negative);
    w.real(p.rho);
    w.integer(detail::checked_u32(p.support.size()));
    for (std::size_t k = 0; k < p.support.size(); ++k) {
      w.integer(detail::checked_u32(p.support[k]));
      w.real(p.alpha[k]);
      w.integer<std::int8_t>(static_cast<std::int8_t>(p.y[k]));
    }
  }
}

inline SvmModel read_model(std::istream& in) {
  detail::LeReader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "STDM", 4) != 0) fail(ErrorKind::parse, "not a model file (bad magic)");
  const auto version = r.integer<std::uint16_t>();
  if (version != model_format_version) fail(ErrorKind::parse, "unsupported model format version " + std::to_string(version));
  SvmModel m;
  m.gamma = r.real();
  m.c = r.real();
  m.dim = r.integer<std::uint32_t>();
  const std::size_t k = r.integer<std::uint32_t>();
  if (k < 2 || k > 1'000'000) fail(ErrorKind::parse, "model class count out of range");
  m.classes.resize(k);
  for (int& c : m.classes) c = r.integer<std::int32_t>();
  const std::size_t nsv = r.integer<std::uint32_t>();
  m.support_vectors.assign(nsv, std::vector<double>(m.dim));
  for (auto& sv : m.support_vectors)
    for (double& v : sv) v = r.real();
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      PairModel p;
      p.positive = r.integer<std::int32_t>();
      p.negative = r.integer<std::int32_t>();
      p.rho = r.real();
      const std::size_t cnt = r.integer<std::uint32_t>();
      if (cnt > nsv) fail(ErrorKind::parse, "pair support count exceeds support vector count");
      for (std::size_t t = 0; t < cnt; ++t) {
        p.support.push_back(r.integer<std::uint32_t>());
        p.alpha.push_back(r.real());
        p.y.push_back(r.integer<std::int8_t>());
      }
      m.pairs.push_back(std::move(p));
    }
  m.validate();
  return m;
}

inline void save_model(const std::string& path, const SvmModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  write_model(out, m);
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

inline SvmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  try {
    return read_model(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace sparse_tda

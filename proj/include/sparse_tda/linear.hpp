#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sparse_tda/error.hpp"
#include "sparse_tda/svm.hpp"

namespace sparse_tda {

struct L1Options {
  double tol = 1e-4;                // relative objective decrease of a full sweep
  std::size_t max_sweeps = 5000;
  bool record_objective = false;
};

/// One binary L1-regularised squared-hinge classifier,
///   min ||w||_1 + C sum max(0, 1 - y_i (w.x_i + b))^2,
/// with an unregularised bias.
struct L1Binary {
  std::vector<double> w;
  double b = 0.0;
  std::size_t sweeps = 0;
  double objective = 0.0;
  std::vector<double> objective_trace;  // after every sweep when recorded
};

namespace detail {

// Feature-major copy of the training vectors: column j holds feature j of
// every sample.
inline Matrix feature_major(const std::vector<std::vector<double>>& xs) {
  const std::size_t n = xs.size(), d = n ? xs.front().size() : 0;
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = xs[i][j];
  return m;
}

class L1Solver {
 public:
  L1Solver(const Matrix& x, std::span<const std::size_t> rows, std::span<const int> y, double c)
      : x_(x), rows_(rows), y_(y), c_(c), slack_(rows.size(), 1.0) {}

  // Continue from `start` (warm start) and return the fitted classifier.
  L1Binary run(L1Binary start, const L1Options& opt) {
    w_ = std::move(start.w);
    w_.resize(x_.cols(), 0.0);
    b_ = start.b;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      double z = b_;
      for (std::size_t j = 0; j < w_.size(); ++j)
        if (w_[j] != 0.0) z += w_[j] * x_(rows_[r], j);
      slack_[r] = 1.0 - y_[r] * z;
    }

    L1Binary out;
    double f_prev = objective();
    if (opt.record_objective) out.objective_trace.push_back(f_prev);
    std::vector<std::size_t> all(x_.cols()), active;
    std::iota(all.begin(), all.end(), std::size_t{0});
    double last_gap = 0.0;
    while (true) {
      sweep(all);
      ++out.sweeps;
      double f = objective();
      if (opt.record_objective) out.objective_trace.push_back(f);
      last_gap = (f_prev - f) / std::max(f_prev, 1e-300);
      f_prev = f;
      if (last_gap <= opt.tol) break;
      if (out.sweeps >= opt.max_sweeps) break;

      // Refine on the current support until it stalls, then re-check all.
      active.clear();
      for (std::size_t j = 0; j < w_.size(); ++j)
        if (w_[j] != 0.0) active.push_back(j);
      while (out.sweeps < opt.max_sweeps) {
        sweep(active);
        ++out.sweeps;
        f = objective();
        if (opt.record_objective) out.objective_trace.push_back(f);
        const double gap = (f_prev - f) / std::max(f_prev, 1e-300);
        f_prev = f;
        if (gap <= opt.tol) break;
      }
      if (out.sweeps >= opt.max_sweeps) break;
    }
    if (last_gap > opt.tol)
      fail(ErrorKind::convergence, "L1 coordinate descent did not converge; final relative objective gap " +
                                       std::to_string(last_gap));
    out.w = w_;
    out.b = b_;
    out.objective = f_prev;
    return out;
  }

 private:
  double objective() const {
    double f = 0.0;
    for (double wj : w_) f += std::abs(wj);
    double loss = 0.0;
    for (double s : slack_)
      if (s > 0.0) loss += s * s;
    return f + c_ * loss;
  }

  // Loss change when slack_r moves by -step * y_r * x_rj.
  template <typename Column>
  double loss_delta(Column&& xcol, double step) const {
    double delta = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const double s = slack_[r];
      const double sn = s - step * y_[r] * xcol(r);
      delta += (sn > 0.0 ? sn * sn : 0.0) - (s > 0.0 ? s * s : 0.0);
    }
    return c_ * delta;
  }

  template <typename Column>
  void apply(Column&& xcol, double step) {
    for (std::size_t r = 0; r < rows_.size(); ++r) slack_[r] -= step * y_[r] * xcol(r);
  }

  // Generalised Newton step on one coordinate with a soft-threshold at the
  // kink, followed by an Armijo backtracking line search. A step that
  // fails the line search is dropped, so the objective never increases.
  template <typename Column>
  double newton_step(Column&& xcol, double current, bool regularised) {
    double g = 0.0, h = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const double s = slack_[r];
      if (s <= 0.0) continue;
      const double xv = xcol(r);
      g -= y_[r] * xv * s;
      h += xv * xv;
    }
    g *= 2.0 * c_;
    h = std::max(2.0 * c_ * h, 1e-12);

    double d = 0.0;
    if (!regularised) d = -g / h;
    else if (g + 1.0 < h * current) d = -(g + 1.0) / h;
    else if (g - 1.0 > h * current) d = -(g - 1.0) / h;
    else d = -current;
    if (std::abs(d) < 1e-12) return 0.0;

    constexpr double sigma = 0.01;
    const double reg = regularised ? std::abs(current + d) - std::abs(current) : 0.0;
    const double predicted = g * d + reg;
    double step = 1.0;
    for (int k = 0; k < 30; ++k, step *= 0.5) {
      const double reg_change = regularised ? std::abs(current + step * d) - std::abs(current) : 0.0;
      const double change = reg_change + loss_delta(xcol, step * d);
      if (change <= sigma * step * predicted && change <= 0.0) {
        apply(xcol, step * d);
        return step * d;
      }
    }
    return 0.0;
  }

  void sweep(std::span<const std::size_t> coords) {
    for (std::size_t j : coords) {
      auto xcol = [&](std::size_t r) { return x_(rows_[r], j); };
      w_[j] += newton_step(xcol, w_[j], true);
      // The soft-threshold branch lands exactly on zero, but w + (-w) can
      // leave rounding residue.
      if (std::abs(w_[j]) < 1e-15) w_[j] = 0.0;
    }
    b_ += newton_step([](std::size_t) { return 1.0; }, b_, false);
  }

  const Matrix& x_;
  std::span<const std::size_t> rows_;
  std::span<const int> y_;
  double c_;
  std::vector<double> slack_;
  std::vector<double> w_;
  double b_ = 0.0;
};

}  // namespace detail

/// One-vs-rest L1-regularised linear classifier.
struct L1Model {
  double c = 1.0;
  std::vector<int> classes;
  std::vector<std::vector<double>> weights;  // one per class
  std::vector<double> biases;
  std::vector<L1Binary> fits;

  std::size_t zero_count() const {
    std::size_t z = 0;
    for (const auto& w : weights) z += static_cast<std::size_t>(std::count(w.begin(), w.end(), 0.0));
    return z;
  }
};

namespace detail {

inline L1Model train_l1_rows(const Matrix& fm, std::span<const int> labels, std::span<const std::size_t> rows,
                             std::span<const int> classes, double c, const L1Options& opt,
                             const L1Model* warm = nullptr) {
  L1Model model;
  model.c = c;
  model.classes.assign(classes.begin(), classes.end());
  std::vector<int> y(rows.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (std::size_t r = 0; r < rows.size(); ++r) y[r] = labels[rows[r]] == classes[k] ? 1 : -1;
    L1Solver solver(fm, rows, y, c);
    L1Binary start;
    if (warm) {
      start.w = warm->weights[k];
      start.b = warm->biases[k];
    }
    auto fit = solver.run(std::move(start), opt);
    model.weights.push_back(fit.w);
    model.biases.push_back(fit.b);
    model.fits.push_back(std::move(fit));
  }
  return model;
}

}  // namespace detail

inline L1Model train_l1(const LabeledSet& data, double c, const L1Options& opt = {}) {
  data.validate();
  require(c > 0.0 && std::isfinite(c), "C must be positive");
  const auto fm = detail::feature_major(data.vectors);
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto classes = data.classes();
  return detail::train_l1_rows(fm, data.labels, rows, classes, c, opt);
}

inline std::vector<double> decision_values(const L1Model& model, std::span<const double> x) {
  std::vector<double> out;
  out.reserve(model.classes.size());
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    require(x.size() == model.weights[k].size(), "feature vector length does not match model");
    double z = model.biases[k];
    for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[k][j] * x[j];
    out.push_back(z);
  }
  return out;
}

// Highest score wins; ties go to the lowest class id.
inline int predict(const L1Model& model, std::span<const double> x) {
  const auto dec = decision_values(model, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < dec.size(); ++k)
    if (dec[k] > dec[best]) best = k;
  return model.classes[best];
}

struct L1SearchResult {
  double c = 0.0;
  double cv_accuracy = 0.0;
  std::vector<double> log2_c;
  std::vector<std::size_t> correct;
};

/// Cross-validated choice of C over an exponential grid. Each fold walks
/// the grid in increasing C, warm-starting from the previous solution.
inline L1SearchResult tune_l1(const LabeledSet& data, std::span<const double> log2_c_grid, std::size_t folds,
                              std::uint64_t seed, const L1Options& opt = {}) {
  data.validate();
  require(!log2_c_grid.empty(), "L1 cost grid is empty");
  std::vector<double> grid(log2_c_grid.begin(), log2_c_grid.end());
  std::sort(grid.begin(), grid.end());
  const auto assignment = stratified_folds(data.labels, folds, seed);
  const auto fm = detail::feature_major(data.vectors);
  const auto classes = data.classes();

  L1SearchResult out;
  out.log2_c = grid;
  out.correct.assign(grid.size(), 0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t t = 0; t < data.size(); ++t) (assignment[t] == f ? test : train).push_back(t);
    std::optional<L1Model> prev;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto model = detail::train_l1_rows(fm, data.labels, train, classes, std::exp2(grid[g]), opt,
                                         prev ? &*prev : nullptr);
      for (std::size_t idx : test)
        if (predict(model, data.vectors[idx]) == data.labels[idx]) ++out.correct[g];
      prev = std::move(model);
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (out.correct[g] > out.correct[best]) best = g;
  out.c = std::exp2(grid[best]);
  out.cv_accuracy = static_cast<double>(out.correct[best]) / static_cast<double>(data.size());
  return out;
}

}  // namespace sparse_tda

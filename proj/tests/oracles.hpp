#pragma once

// Reference implementations used only by the tests. Each one computes the
// same quantity as a library routine by a different, slower route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "sparse_tda/diagram.hpp"
#include "sparse_tda/matrix.hpp"
#include "sparse_tda/persistence0.hpp"
#include "sparse_tda/random.hpp"

namespace oracle {

using sparse_tda::DiagramPoint;
using sparse_tda::PersistenceDiagram;

// Exhaustive search over partial matchings; unmatched points go to the
// diagonal.
inline double brute_force_w1(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  std::vector<char> used(pb.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  const auto linf = [](const DiagramPoint& x, const DiagramPoint& y) {
    return std::max(std::abs(x.birth - y.birth), std::abs(x.death - y.death));
  };
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (i == pa.size()) {
      double total = acc;
      for (std::size_t j = 0; j < pb.size(); ++j)
        if (!used[j]) total += 0.5 * (pb[j].death - pb[j].birth);
      best = std::min(best, total);
      return;
    }
    rec(i + 1, acc + 0.5 * (pa[i].death - pa[i].birth));
    for (std::size_t j = 0; j < pb.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      rec(i + 1, acc + linf(pa[i], pb[j]));
      used[j] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

// Component label of every vertex of {v : h(v) <= t} (-1 outside), by
// breadth-first flood fill.
inline std::vector<int> sublevel_components(const sparse_tda::ScalarField& f, double t, int connectivity) {
  const auto rows = static_cast<int>(f.rows()), cols = static_cast<int>(f.cols());
  std::vector<int> label(f.size(), -1);
  int next = 0;
  for (int start = 0; start < rows * cols; ++start) {
    if (label[start] >= 0 || f.values()[start] > t) continue;
    std::vector<int> queue{start};
    label[start] = next;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int r = queue[q] / cols, c = queue[q] % cols;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (connectivity == 4 && dr != 0 && dc != 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
          const int u = nr * cols + nc;
          if (label[u] >= 0 || f.values()[u] > t) continue;
          label[u] = next;
          queue.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

inline int count_components(const std::vector<int>& labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

// Positive-persistence part of the 0-dimensional diagram recovered from
// persistent Betti numbers: rank(s, t) = number of components of X_t that
// meet X_s. The multiplicity of (b_i, d_j) over the sorted distinct
// levels is rank(i, j-1) - rank(i-1, j-1) - rank(i, j) + rank(i-1, j).
// Essential classes are returned separately.
struct RecoveredDiagram {
  std::multiset<std::pair<double, double>> finite;
  std::multiset<double> essential;
};

inline RecoveredDiagram diagram_from_ranks(const sparse_tda::ScalarField& f, int connectivity) {
  std::vector<double> levels(f.values());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t m = levels.size();
  std::vector<std::vector<int>> comps(m);
  for (std::size_t k = 0; k < m; ++k) comps[k] = sublevel_components(f, levels[k], connectivity);

  // rank(s, t) for s <= t; index -1 means the empty sublevel set.
  const auto rank = [&](long s, long t) -> int {
    if (s < 0) return 0;
    std::set<int> hit;
    for (std::size_t v = 0; v < f.size(); ++v)
      if (comps[s][v] >= 0) hit.insert(comps[t][v]);
    return static_cast<int>(hit.size());
  };

  RecoveredDiagram out;
  for (long i = 0; i < static_cast<long>(m); ++i) {
    for (long j = i + 1; j < static_cast<long>(m); ++j) {
      const int mult = rank(i, j - 1) - rank(i - 1, j - 1) - rank(i, j) + rank(i - 1, j);
      for (int k = 0; k < mult; ++k) out.finite.insert({levels[i], levels[j]});
    }
    const int born = rank(i, static_cast<long>(m) - 1) - rank(i - 1, static_cast<long>(m) - 1);
    for (int k = 0; k < born; ++k) out.essential.insert(levels[i]);
  }
  return out;
}

// Adaptive Simpson with Richardson correction and an absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int depth) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        const double diff = left + right - whole;
        if (depth <= 0 || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
               rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40);
}

// Nested adaptive Simpson over the box of the weighted Gaussian. The
// interval is pre-split so a narrow peak cannot hide between the first
// few sample points.
inline double box_integral(double ux, double uy, double w, double sigma, double x0, double x1, double y0, double y1) {
  const double norm = w / (2.0 * std::numbers::pi * sigma * sigma);
  const auto split = [&](const auto& f, double a, double b, double tol) {
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / sigma)));
    double total = 0.0;
    for (int k = 0; k < pieces; ++k)
      total += adaptive_simpson(f, a + (b - a) * k / pieces, a + (b - a) * (k + 1) / pieces, tol / pieces);
    return total;
  };
  const auto inner = [&](double x) {
    const auto g = [&](double y) {
      const double dx = x - ux, dy = y - uy;
      return norm * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    };
    return split(g, y0, y1, 1e-13);
  };
  return split(inner, x0, x1, 1e-11);
}

inline Eigen::MatrixXd to_eigen(const sparse_tda::Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) e(i, j) = m(i, j);
  return e;
}

// Singular values (descending) as square roots of the eigenvalues of X^T X.
inline std::vector<double> gram_singular_values(const sparse_tda::Matrix& x) {
  const Eigen::MatrixXd e = to_eigen(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e.transpose() * e);
  std::vector<double> out;
  for (long k = solver.eigenvalues().size() - 1; k >= 0; --k) out.push_back(std::sqrt(std::max(0.0, solver.eigenvalues()(k))));
  return out;
}

// Greedy column selection on A = U^T that re-derives every residual from
// scratch with modified Gram-Schmidt against the already chosen columns.
// After r picks the rest follow in ascending index order.
inline std::vector<std::size_t> naive_greedy_pivots(const sparse_tda::Matrix& u) {
  const std::size_t p = u.rows(), r = u.cols();
  std::vector<std::vector<double>> cols(p, std::vector<double>(r));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < r; ++i) cols[j][i] = u(j, i);
  std::vector<std::vector<double>> basis;
  std::vector<char> taken(p, 0);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < r; ++step) {
    std::vector<std::vector<double>> residual(p);
    std::vector<double> norm(p, -1.0);
    for (std::size_t j = 0; j < p; ++j) {
      if (taken[j]) continue;
      residual[j] = cols[j];
      for (const auto& q : basis) {
        double proj = 0.0;
        for (std::size_t i = 0; i < r; ++i) proj += q[i] * residual[j][i];
        for (std::size_t i = 0; i < r; ++i) residual[j][i] -= proj * q[i];
      }
      norm[j] = 0.0;
      for (double v : residual[j]) norm[j] += v * v;
    }
    // lowest index among those within 1e-12 of the maximum
    const double top = *std::max_element(norm.begin(), norm.end());
    std::size_t arg = 0;
    while (taken[arg] || norm[arg] < top - 1e-12) ++arg;
    const double best = norm[arg];
    std::vector<double> best_res = residual[arg];
    taken[arg] = 1;
    order.push_back(arg);
    const double nrm = std::sqrt(best);
    if (nrm > 0.0) {
      for (double& v : best_res) v /= nrm;
      basis.push_back(best_res);
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    if (!taken[j]) order.push_back(j);
  return order;
}

inline sparse_tda::Matrix random_matrix(std::size_t rows, std::size_t cols, sparse_tda::Rng& rng) {
  sparse_tda::Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Q factor of a Householder QR of a random Gaussian matrix.
inline sparse_tda::Matrix random_orthonormal(std::size_t p, std::size_t r, sparse_tda::Rng& rng) {
  const Eigen::MatrixXd g = to_eigen(random_matrix(p, r, rng));
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(p, r);
  sparse_tda::Matrix out(p, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < p; ++i) out(i, j) = q(static_cast<long>(i), static_cast<long>(j));
  return out;
}

inline PersistenceDiagram random_diagram(std::size_t n, sparse_tda::Rng& rng, double span = 4.0) {
  std::vector<DiagramPoint> pts;
  for (std::size_t k = 0; k < n; ++k) {
    const double b = rng.uniform(0.0, span);
    pts.push_back({b, b + rng.uniform(0.0, span / 2.0)});
  }
  return PersistenceDiagram(std::move(pts));
}

}  // namespace oracle

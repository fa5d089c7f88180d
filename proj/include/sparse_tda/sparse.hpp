#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_tda/error.hpp"
#include "sparse_tda/matrix.hpp"

namespace sparse_tda {

struct Svd {
  Matrix u;                     // p x r, orthonormal columns
  std::vector<double> values;   // r, nonincreasing
  Matrix v;                     // n x r, orthonormal columns
};

namespace detail {

// One-sided (Hestenes) Jacobi on a tall matrix: rotates column pairs until
// all are mutually orthogonal. Returns the orthogonalised columns in `a`
// and the accumulated rotations in `v`.
inline void hestenes_jacobi(Matrix& a, Matrix& v) {
  const std::size_t n = a.cols();
  v = Matrix::identity(n);
  constexpr double tol = 1e-15;
  constexpr int max_sweeps = 80;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        auto ai = a.col(i), aj = a.col(j);
        const double alpha = dot(ai, ai), beta = dot(aj, aj), gamma = dot(ai, aj);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < ai.size(); ++k) {
          const double x = ai[k], y = aj[k];
          ai[k] = c * x - s * y;
          aj[k] = s * x + c * y;
        }
        auto vi = v.col(i), vj = v.col(j);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vi[k], y = vj[k];
          vi[k] = c * x - s * y;
          vj[k] = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
}

// Replaces column `j` of `u` with a unit vector orthogonal to columns
// [0, j), built from the first standard basis vector that survives
// two rounds of Gram-Schmidt.
inline void complete_basis_column(Matrix& u, std::size_t j) {
  const std::size_t p = u.rows();
  for (std::size_t e = 0; e < p; ++e) {
    std::vector<double> w(p, 0.0);
    w[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        const double proj = dot(w, u.col(k));
        for (std::size_t i = 0; i < p; ++i) w[i] -= proj * u(i, k);
      }
    const double nw = norm2(w);
    if (nw > 0.5) {
      for (std::size_t i = 0; i < p; ++i) u(i, j) = w[i] / nw;
      return;
    }
  }
}

// Thin Householder QR of a tall matrix: x = q r with q p x n orthonormal
// and r n x n upper triangular.
inline void householder_qr(const Matrix& x, Matrix& q, Matrix& r) {
  const std::size_t p = x.rows(), n = x.cols();
  Matrix a = x;
  std::vector<std::vector<double>> reflectors(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto col = a.col(k);
    double norm = 0.0;
    for (std::size_t i = k; i < p; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    std::vector<double> h(col.begin() + static_cast<std::ptrdiff_t>(k), col.end());
    h[0] += col[k] >= 0.0 ? norm : -norm;
    const double hn2 = dot(h, h);
    for (std::size_t j = k; j < n; ++j) {
      auto cj = a.col(j);
      double proj = 0.0;
      for (std::size_t i = k; i < p; ++i) proj += h[i - k] * cj[i];
      const double f = 2.0 * proj / hn2;
      for (std::size_t i = k; i < p; ++i) cj[i] -= f * h[i - k];
    }
    reflectors[k] = std::move(h);
  }
  r = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) r(i, j) = a(i, j);
  // q = H_0 ... H_{n-1} applied to the first n columns of the identity
  q = Matrix(p, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    const auto& h = reflectors[k];
    if (h.empty()) continue;
    const double hn2 = dot(h, h);
    for (std::size_t j = 0; j < n; ++j) {
      auto qj = q.col(j);
      double proj = 0.0;
      for (std::size_t i = k; i < p; ++i) proj += h[i - k] * qj[i];
      const double f = 2.0 * proj / hn2;
      for (std::size_t i = k; i < p; ++i) qj[i] -= f * h[i - k];
    }
  }
}

// Jacobi runs on the small triangular factor of a QR when the matrix is
// clearly tall, then the left vectors are mapped back through q.
inline Svd thin_svd_tall(const Matrix& x) {
  Matrix q, a = x;
  const bool reduce = x.rows() > x.cols() + x.cols() / 2;
  if (reduce) householder_qr(x, q, a);
  Matrix v;
  hestenes_jacobi(a, v);
  if (reduce) a = q * a;
  const std::size_t n = a.cols();
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(a.col(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return norms[l] > norms[r]; });

  Svd out{Matrix(a.rows(), n), std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = norms[src];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, src);
    if (norms[src] > 0.0)
      for (std::size_t i = 0; i < a.rows(); ++i) out.u(i, k) = a(i, src) / norms[src];
    else
      complete_basis_column(out.u, k);
  }
  return out;
}

}  // namespace detail

/// Rank-r truncated SVD of a p x n matrix. Singular vectors are signed so
/// that the largest-magnitude entry of each left vector is positive (first
/// such entry on ties).
inline Svd truncated_svd(const Matrix& x, std::size_t r) {
  const std::size_t p = x.rows(), n = x.cols();
  require(r >= 1 && r <= std::min(p, n), "truncation rank must lie in [1, min(p, n)]");
  Svd full;
  if (p >= n) {
    full = detail::thin_svd_tall(x);
  } else {
    Svd t = detail::thin_svd_tall(x.transpose());
    full = Svd{std::move(t.v), std::move(t.values), std::move(t.u)};
  }
  Svd out{full.u.leading_cols(r), std::vector<double>(full.values.begin(), full.values.begin() + static_cast<std::ptrdiff_t>(r)),
          full.v.leading_cols(r)};
  for (std::size_t k = 0; k < r; ++k) {
    auto uk = out.u.col(k);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::abs(uk[i]) > std::abs(uk[arg])) arg = i;
    if (uk[arg] < 0.0) {
      for (double& e : uk) e = -e;
      for (double& e : out.v.col(k)) e = -e;
    }
  }
  return out;
}

/// Coefficient of the optimal hard threshold for an unknown noise level,
/// as a function of the aspect ratio beta = min(p, n) / max(p, n).
inline double threshold_coefficient(double beta) {
  return 0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43;
}

/// Number of singular values above omega(beta) * median(singular values),
/// floored at 1 and capped at min(p, n - 1).
inline std::size_t optimal_rank(std::span<const double> singular_values, std::size_t p, std::size_t n) {
  require(!singular_values.empty(), "optimal_rank needs singular values");
  require(p >= 1 && n >= 1, "matrix dimensions must be positive");
  const bool any_positive = std::any_of(singular_values.begin(), singular_values.end(), [](double s) { return s > 0.0; });
  require(any_positive, "all singular values are zero");

  std::vector<double> sorted(singular_values.begin(), singular_values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  const double beta = static_cast<double>(std::min(p, n)) / static_cast<double>(std::max(p, n));
  const double tau = threshold_coefficient(beta) * median;

  std::size_t r = static_cast<std::size_t>(
      std::count_if(singular_values.begin(), singular_values.end(), [&](double s) { return s > tau; }));
  const std::size_t cap = n >= 2 ? std::min(p, n - 1) : p;
  return std::clamp(r, std::size_t{1}, std::max<std::size_t>(cap, 1));
}

struct PivotedQr {
  std::vector<std::size_t> pivots;  // permutation of {0..p-1}
  std::vector<double> diagonal;     // |R_kk| for the greedy steps
};

/// Column-pivoted Householder QR of components^T (r x p). At each step the
/// remaining column with the largest residual norm is moved forward; norms
/// are recomputed rather than downdated so that the choice is exact, and
/// ties (up to rounding) go to the lowest original column index. Once the r greedy steps
/// are exhausted the remaining columns follow in ascending index order.
inline PivotedQr qr_pivots(const Matrix& components) {
  const std::size_t p = components.rows(), r = components.cols();
  require(r >= 1 && r <= p, "components must be p x r with 1 <= r <= p");
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = a; b < r; ++b) {
      const double g = dot(components.col(a), components.col(b));
      if (std::abs(g - (a == b ? 1.0 : 0.0)) > 1e-6)
        fail(ErrorKind::validation, "components are not orthonormal");
    }

  Matrix a = components.transpose();  // r x p, columns are pixels
  PivotedQr out;
  out.pivots.resize(p);
  std::iota(out.pivots.begin(), out.pivots.end(), std::size_t{0});

  // Squared residual norms within tie_tol of the largest count as ties;
  // otherwise rounding decides between rows that are equal in exact
  // arithmetic (every row of a square orthogonal matrix, for instance).
  constexpr double tie_tol = 1e-12;
  std::vector<double> hv(r), norms(p);
  for (std::size_t t = 0; t < r; ++t) {
    for (std::size_t j = t; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = t; i < r; ++i) s += a(i, j) * a(i, j);
      norms[j] = s;
    }
    const double top = *std::max_element(norms.begin() + static_cast<std::ptrdiff_t>(t), norms.end());
    std::size_t best = p;
    for (std::size_t j = t; j < p; ++j)
      if (norms[j] >= top - tie_tol && (best == p || out.pivots[j] < out.pivots[best])) best = j;
    const double best_norm = norms[best];
    if (best != t) {
      std::swap_ranges(a.col(t).begin(), a.col(t).end(), a.col(best).begin());
      std::swap(out.pivots[t], out.pivots[best]);
    }
    const double norm = std::sqrt(best_norm);
    out.diagonal.push_back(norm);
    if (norm == 0.0) continue;

    // Householder reflector mapping a(t:r, t) onto -sign * norm * e_t.
    const double alpha = a(t, t) >= 0.0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = t; i < r; ++i) {
      hv[i] = a(i, t) - (i == t ? alpha : 0.0);
      vnorm2 += hv[i] * hv[i];
    }
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = t; j < p; ++j) {
      double proj = 0.0;
      for (std::size_t i = t; i < r; ++i) proj += hv[i] * a(i, j);
      const double f = 2.0 * proj / vnorm2;
      for (std::size_t i = t; i < r; ++i) a(i, j) -= f * hv[i];
    }
  }
  std::sort(out.pivots.begin() + static_cast<std::ptrdiff_t>(r), out.pivots.end());
  return out;
}

/// Fitted pixel selector: principal components, spectrum, optimal rank and
/// the pivot order over pixels.
struct FeatureSelector {
  Matrix components;                  // p x k, the basis the pivots were computed from
  std::vector<double> singular_values;
  std::size_t rank = 0;               // optimal truncation rank r_o
  std::vector<std::size_t> pivots;
  std::size_t s = 0;

  std::size_t pixel_count() const noexcept { return pivots.size(); }

  std::span<const std::size_t> selected() const noexcept { return {pivots.data(), s}; }

  void validate() const {
    const std::size_t p = pivots.size();
    require(p >= 1, "selector has no pixels");
    require(s >= 1 && s <= p, "selector sample count out of range");
    require(rank >= 1, "selector rank must be positive");
    require(components.rows() == p && components.cols() >= 1 && components.cols() <= p,
            "selector components shape mismatch");
    std::vector<char> seen(p, 0);
    for (std::size_t idx : pivots) {
      require(idx < p && !seen[idx], "selector pivots are not a permutation");
      seen[idx] = 1;
    }
    for (std::size_t k = 0; k < singular_values.size(); ++k) {
      require(singular_values[k] >= 0.0 && std::isfinite(singular_values[k]), "singular values must be nonnegative");
      require(k == 0 || singular_values[k] <= singular_values[k - 1], "singular values must be nonincreasing");
    }
    for (std::size_t a = 0; a < components.cols(); ++a)
      for (std::size_t b = a; b < components.cols(); ++b) {
        const double g = dot(components.col(a), components.col(b));
        require(std::abs(g - (a == b ? 1.0 : 0.0)) <= 1e-10, "selector components are not orthonormal");
      }
  }
};

/// Pixels-by-samples training matrix -> selector. The truncation rank r_o
/// comes from the optimal hard threshold; the number of kept pixels is
/// r_o unless overridden. When more pixels than r_o are requested the
/// pivots are computed from that many leading components (up to the
/// available rank).
inline FeatureSelector fit_selector(const Matrix& x, std::optional<std::size_t> s_override = std::nullopt) {
  const std::size_t p = x.rows(), n = x.cols();
  require(n >= 2, "selector needs at least two training samples");
  require(p >= 1, "selector needs at least one pixel");
  for (double v : x.data()) require(std::isfinite(v), "training matrix contains non-finite values");

  const std::size_t full_rank = std::min(p, n);
  Svd svd = truncated_svd(x, full_rank);
  FeatureSelector sel;
  sel.singular_values = svd.values;
  sel.rank = optimal_rank(svd.values, p, n);
  sel.s = std::clamp<std::size_t>(s_override.value_or(sel.rank), 1, p);
  const std::size_t k = std::min(std::max(sel.rank, sel.s), full_rank);
  sel.components = svd.u.leading_cols(k);
  sel.pivots = qr_pivots(sel.components).pivots;
  return sel;
}

inline std::vector<double> sample(const FeatureSelector& sel, std::span<const double> x) {
  require(x.size() == sel.pixel_count(), "feature vector length does not match selector");
  std::vector<double> out(sel.s);
  for (std::size_t k = 0; k < sel.s; ++k) out[k] = x[sel.pivots[k]];
  return out;
}

/// Fraction of squared spectral mass in the leading `s` singular values.
inline double energy(std::span<const double> singular_values, std::size_t s) {
  if (s >= singular_values.size()) return 1.0;
  double head = 0.0, total = 0.0;
  for (std::size_t k = 0; k < singular_values.size(); ++k) {
    const double sq = singular_values[k] * singular_values[k];
    total += sq;
    if (k < s) head += sq;
  }
  return total > 0.0 ? head / total : 1.0;
}

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}
  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  template <typename T>
  void integer(T v) {
    unsigned char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    bytes(buf, sizeof(T));
  }
  void real(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    integer(bits);
  }

 private:
  std::ostream& out_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}
  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorKind::parse, "unexpected end of binary file");
  }
  template <typename T>
  T integer() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    return static_cast<T>(u);
  }
  double real() {
    const auto bits = integer<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

 private:
  std::istream& in_;
};

inline std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) fail(ErrorKind::validation, "value does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline constexpr std::uint16_t selector_format_version = 1;

// Layout (little-endian): "STDA", u16 version, u32 p, u32 r_o, u32 s,
// u32 k (component columns), u32 m (singular values), u32 pivots[p],
// f64 components[p*k] column-major, f64 singular_values[m].
inline void write_selector(std::ostream& out, const FeatureSelector& sel) {
  sel.validate();
  detail::LeWriter w(out);
  w.bytes("STDA", 4);
  w.integer<std::uint16_t>(selector_format_version);
  w.integer(detail::checked_u32(sel.pixel_count()));
  w.integer(detail::checked_u32(sel.rank));
  w.integer(detail::checked_u32(sel.s));
  w.integer(detail::checked_u32(sel.components.cols()));
  w.integer(detail::checked_u32(sel.singular_values.size()));
  for (std::size_t idx : sel.pivots) w.integer(detail::checked_u32(idx));
  for (double v : sel.components.data()) w.real(v);
  for (double v : sel.singular_values) w.real(v);
}

inline FeatureSelector read_selector(std::istream& in) {
  detail::LeReader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "STDA", 4) != 0) fail(ErrorKind::parse, "not a selector file (bad magic)");
  const auto version = r.integer<std::uint16_t>();
  if (version != selector_format_version)
    fail(ErrorKind::parse, "unsupported selector format version " + std::to_string(version));
  const std::size_t p = r.integer<std::uint32_t>();
  FeatureSelector sel;
  sel.rank = r.integer<std::uint32_t>();
  sel.s = r.integer<std::uint32_t>();
  const std::size_t k = r.integer<std::uint32_t>();
  const std::size_t m = r.integer<std::uint32_t>();
  if (p == 0 || k == 0 || k > p || m > p) fail(ErrorKind::parse, "selector header has inconsistent sizes");
  sel.pivots.resize(p);
  for (auto& idx : sel.pivots) idx = r.integer<std::uint32_t>();
  std::vector<double> comp(p * k);
  for (double& v : comp) v = r.real();
  sel.components = Matrix(p, k, std::move(comp));
  sel.singular_values.resize(m);
  for (double& v : sel.singular_values) v = r.real();
  sel.validate();
  return sel;
}

inline void save_selector(const std::string& path, const FeatureSelector& sel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  write_selector(out, sel);
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

inline FeatureSelector load_selector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  try {
    return read_selector(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace sparse_tda

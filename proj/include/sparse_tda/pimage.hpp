#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sparse_tda/diagram.hpp"

namespace sparse_tda {

/// Uniform R_x by R_y partition of a rectangle in birth-persistence space.
/// Index i runs along the birth axis, j along the persistence axis.
struct PiGrid {
  std::size_t rx = 30;
  std::size_t ry = 30;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;

  void validate() const {
    require(rx >= 1 && ry >= 1, "grid resolution must be at least 1x1");
    require(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max),
            "grid bounds must be finite");
    require(x_max > x_min && y_max > y_min, "grid bounds must satisfy max > min");
  }

  std::size_t pixel_count() const noexcept { return rx * ry; }
  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(rx); }
  double dy() const noexcept { return (y_max - y_min) / static_cast<double>(ry); }
  double x_edge(std::size_t i) const noexcept { return i == rx ? x_max : x_min + static_cast<double>(i) * dx(); }
  double y_edge(std::size_t j) const noexcept { return j == ry ? y_max : y_min + static_cast<double>(j) * dy(); }

  friend bool operator==(const PiGrid&, const PiGrid&) = default;
};

enum class WeightKind { linear, nonlinear };

inline WeightKind weight_kind_from_string(const std::string& s) {
  if (s == "linear" || s == "lw" || s == "LW") return WeightKind::linear;
  if (s == "nonlinear" || s == "nw" || s == "NW") return WeightKind::nonlinear;
  fail(ErrorKind::configuration, "unknown weighting '" + s + "' (expected linear or nonlinear)");
}

inline const char* to_string(WeightKind k) { return k == WeightKind::linear ? "linear" : "nonlinear"; }

/// Linear: u_y / normalizer, with normalizer the largest training
/// persistence. Nonlinear: atan(normalizer * u_y), with normalizer the
/// reciprocal of the median of per-diagram median persistences.
struct WeightSpec {
  WeightKind kind = WeightKind::linear;
  double normalizer = 1.0;

  void validate() const {
    require(std::isfinite(normalizer) && normalizer > 0.0, "weight normalizer must be positive");
  }
};

inline double weight(double persistence, const WeightSpec& spec) {
  return spec.kind == WeightKind::linear ? persistence / spec.normalizer
                                         : std::atan(spec.normalizer * persistence);
}

inline double lw_normalizer(std::span<const PersistenceDiagram> training) {
  double best = 0.0;
  for (const auto& d : training)
    for (const auto& p : d.points()) best = std::max(best, p.persistence());
  if (!(best > 0.0)) fail(ErrorKind::degenerate, "no training point has positive persistence");
  return best;
}

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

// Empty diagrams have no inner median and are skipped.
inline double nw_normalizer(std::span<const PersistenceDiagram> training) {
  require(!training.empty(), "nonlinear normalizer needs at least one training diagram");
  std::vector<double> inner;
  for (const auto& d : training) {
    if (d.empty()) continue;
    std::vector<double> pers;
    pers.reserve(d.size());
    for (const auto& p : d.points()) pers.push_back(p.persistence());
    inner.push_back(detail::median(std::move(pers)));
  }
  require(!inner.empty(), "nonlinear normalizer needs a non-empty training diagram");
  const double m = detail::median(std::move(inner));
  if (!(m > 0.0)) fail(ErrorKind::degenerate, "median of median persistences is zero");
  return 1.0 / m;
}

inline WeightSpec fit_weight(WeightKind kind, std::span<const PersistenceDiagram> training) {
  return {kind, kind == WeightKind::linear ? lw_normalizer(training) : nw_normalizer(training)};
}

/// Weighted sum of isotropic Gaussians centred at the transformed points.
inline double surface_value(const TransformedDiagram& d, const WeightSpec& spec, double sigma, double zx,
                            double zy) {
  require(sigma > 0.0, "sigma must be positive");
  const double two_var = 2.0 * sigma * sigma;
  const double norm = 1.0 / (std::numbers::pi * two_var);
  double total = 0.0;
  for (const auto& u : d) {
    const double dx = zx - u.birth, dy = zy - u.persistence;
    total += weight(u.persistence, spec) * norm * std::exp(-(dx * dx + dy * dy) / two_var);
  }
  return total;
}

namespace detail {

// Phi(b) - Phi(a) for a <= b, using erfc in the upper tail to avoid
// cancellation.
inline double normal_mass(double a, double b) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  if (a >= 0.0) return 0.5 * (std::erfc(a * inv_sqrt2) - std::erfc(b * inv_sqrt2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b * inv_sqrt2) - std::erfc(-a * inv_sqrt2));
  return 0.5 * (std::erf(b * inv_sqrt2) - std::erf(a * inv_sqrt2));
}

}  // namespace detail

class PersistenceImage {
 public:
  PersistenceImage(PiGrid grid, double sigma) : grid_(grid), sigma_(sigma), pixels_(grid.pixel_count(), 0.0) {
    grid_.validate();
    require(sigma > 0.0, "sigma must be positive");
  }

  PersistenceImage(PiGrid grid, double sigma, std::vector<double> pixels)
      : grid_(grid), sigma_(sigma), pixels_(std::move(pixels)) {
    grid_.validate();
    require(sigma > 0.0, "sigma must be positive");
    require(pixels_.size() == grid_.pixel_count(), "pixel count does not match grid");
  }

  const PiGrid& grid() const noexcept { return grid_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t rows() const noexcept { return grid_.rx; }
  std::size_t cols() const noexcept { return grid_.ry; }

  double operator()(std::size_t i, std::size_t j) const { return pixels_[i * grid_.ry + j]; }
  double& operator()(std::size_t i, std::size_t j) { return pixels_[i * grid_.ry + j]; }

  std::span<const double> pixels() const noexcept { return pixels_; }

 private:
  PiGrid grid_;
  double sigma_;
  std::vector<double> pixels_;  // row-major, row = birth index
};

/// Exact integral of the persistence surface over every grid box. The
/// Gaussian is separable, so each box integral is a product of two
/// normal-CDF differences. Points outside the domain are not clamped.
inline PersistenceImage rasterize(const TransformedDiagram& d, const PiGrid& grid, const WeightSpec& spec,
                                  double sigma) {
  spec.validate();
  PersistenceImage image(grid, sigma);
  std::vector<double> mass_x(grid.rx), mass_y(grid.ry);
  for (const auto& u : d) {
    const double w = weight(u.persistence, spec);
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < grid.rx; ++i)
      mass_x[i] = detail::normal_mass((grid.x_edge(i) - u.birth) / sigma, (grid.x_edge(i + 1) - u.birth) / sigma);
    for (std::size_t j = 0; j < grid.ry; ++j)
      mass_y[j] = detail::normal_mass((grid.y_edge(j) - u.persistence) / sigma,
                                      (grid.y_edge(j + 1) - u.persistence) / sigma);
    for (std::size_t i = 0; i < grid.rx; ++i) {
      const double wx = w * mass_x[i];
      if (wx == 0.0) continue;
      for (std::size_t j = 0; j < grid.ry; ++j) image(i, j) += wx * mass_y[j];
    }
  }
  return image;
}

inline std::vector<double> vectorize(const PersistenceImage& pi) {
  return {pi.pixels().begin(), pi.pixels().end()};
}

inline PersistenceImage unflatten(std::span<const double> v, const PiGrid& grid, double sigma) {
  return PersistenceImage(grid, sigma, std::vector<double>(v.begin(), v.end()));
}

/// Bounding box of the transformed training points padded by `pad` on
/// every side: [min birth, max birth] x [0, max persistence].
inline PiGrid fit_grid(std::span<const TransformedDiagram> training, std::size_t rx, std::size_t ry, double pad) {
  require(pad >= 0.0, "grid padding must be nonnegative");
  double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin, pmax = 0.0;
  bool any = false;
  for (const auto& d : training)
    for (const auto& u : d) {
      any = true;
      bmin = std::min(bmin, u.birth);
      bmax = std::max(bmax, u.birth);
      pmax = std::max(pmax, u.persistence);
    }
  if (!any) fail(ErrorKind::degenerate, "cannot fit a grid domain to diagrams without points");
  PiGrid grid{rx, ry, bmin - pad, bmax + pad, -pad, pmax + pad};
  if (!(grid.x_max > grid.x_min)) grid.x_max = grid.x_min + 1.0;
  if (!(grid.y_max > grid.y_min)) grid.y_max = grid.y_min + 1.0;
  grid.validate();
  return grid;
}

inline void write_image_csv(std::ostream& out, const PersistenceImage& pi) {
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    for (std::size_t j = 0; j < pi.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_real(pi(i, j));
    }
    out << '\n';
  }
}

/// 16-bit binary PGM scaled by the image maximum; the sidecar file
/// `<path>.scale` records the factor that maps stored samples back to
/// pixel values (value = sample * scale).
inline void save_image_pgm(const std::string& path, const PersistenceImage& pi) {
  double vmax = 0.0;
  for (double v : pi.pixels()) vmax = std::max(vmax, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out << "P5\n" << pi.cols() << ' ' << pi.rows() << "\n65535\n";
  for (double v : pi.pixels()) {
    const auto sample = vmax > 0.0 ? static_cast<std::uint16_t>(std::lround(v / vmax * 65535.0)) : std::uint16_t{0};
    out.put(static_cast<char>(sample >> 8));
    out.put(static_cast<char>(sample & 0xff));
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path);
  std::ofstream side(path + ".scale");
  if (!side) fail(ErrorKind::io, "cannot write " + path + ".scale");
  side << "max " << detail::format_real(vmax) << "\nscale " << detail::format_real(vmax / 65535.0) << '\n';
}

inline void save_image_csv(const std::string& path, const PersistenceImage& pi) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  write_image_csv(out, pi);
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

}  // namespace sparse_tda

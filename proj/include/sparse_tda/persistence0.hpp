#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sparse_tda/diagram.hpp"

namespace sparse_tda {

/// Row-major grid of filtration heights. A 1-D signal has one row.
class ScalarField {
 public:
  ScalarField(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    require(rows_ >= 1 && cols_ >= 1, "scalar field must be non-empty");
    require(values_.size() == rows_ * cols_, "scalar field value count does not match shape");
    for (double v : values_) require(std::isfinite(v), "scalar field values must be finite");
  }

  static ScalarField signal(std::vector<double> values) {
    const std::size_t n = values.size();
    return ScalarField(1, n, std::move(values));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

enum class Connectivity { four = 4, eight = 8 };

inline Connectivity connectivity_from_int(int c) {
  if (c == 4) return Connectivity::four;
  if (c == 8) return Connectivity::eight;
  fail(ErrorKind::configuration, "connectivity must be 4 or 8, got " + std::to_string(c));
}

namespace detail {

class ComponentForest {
 public:
  explicit ComponentForest(std::size_t n) : parent_(n), origin_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    std::iota(origin_.begin(), origin_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  // Vertex where the component containing `root` was born.
  std::size_t origin(std::size_t root) const { return origin_[root]; }

  void attach(std::size_t child_root, std::size_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> origin_;
};

}  // namespace detail

/// 0-dimensional sublevel-set persistence of a scalar field. Vertices enter
/// at their value, edges at the max of their endpoints. When components
/// meet, the younger one (later birth; on equal births the one whose
/// birth vertex has the higher linear index) dies at the current value.
inline PersistenceDiagram sublevel_pd0(const ScalarField& field,
                                       Connectivity connectivity = Connectivity::four) {
  const std::size_t rows = field.rows(), cols = field.cols(), n = field.size();
  const auto& h = field.values();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return h[a] < h[b] || (h[a] == h[b] && a < b);
  });

  const auto older = [&](std::size_t va, std::size_t vb) {
    return h[va] < h[vb] || (h[va] == h[vb] && va < vb);
  };

  detail::ComponentForest forest(n);
  std::vector<char> active(n, 0);
  std::vector<DiagramPoint> points;
  std::vector<std::size_t> roots;

  static constexpr int offsets4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  static constexpr int offsets8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                         {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  const bool eight = connectivity == Connectivity::eight;
  const int num_offsets = eight ? 8 : 4;

  for (std::size_t v : order) {
    active[v] = 1;
    const auto r = static_cast<std::ptrdiff_t>(v / cols);
    const auto c = static_cast<std::ptrdiff_t>(v % cols);
    roots.clear();
    for (int k = 0; k < num_offsets; ++k) {
      const auto nr = r + (eight ? offsets8[k][0] : offsets4[k][0]);
      const auto nc = c + (eight ? offsets8[k][1] : offsets4[k][1]);
      if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(rows) ||
          nc >= static_cast<std::ptrdiff_t>(cols))
        continue;
      const auto u = static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc);
      if (!active[u]) continue;
      const std::size_t root = forest.find(u);
      if (std::find(roots.begin(), roots.end(), root) == roots.end()) roots.push_back(root);
    }
    if (roots.empty()) continue;  // local minimum: v starts its own component

    auto eldest = roots.front();
    for (std::size_t root : roots)
      if (older(forest.origin(root), forest.origin(eldest))) eldest = root;
    for (std::size_t root : roots) {
      if (root == eldest) continue;
      points.push_back({h[forest.origin(root)], h[v]});
      forest.attach(root, eldest);
    }
    forest.attach(v, eldest);
  }

  std::vector<double> essential;
  for (std::size_t v = 0; v < n; ++v)
    if (forest.find(v) == v) essential.push_back(h[forest.origin(v)]);
  return PersistenceDiagram(std::move(points), std::move(essential));
}

/// Rows of comma-separated reals; all rows must have the same length.
inline ScalarField parse_field_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      const auto tok = detail::trim(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start));
      double v = 0.0;
      if (!detail::parse_real(tok, v))
        fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": invalid value '" + std::string(tok) + "'");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                                 " values, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::parse, "empty scalar field");
  return ScalarField(rows, cols, std::move(values));
}

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace detail

/// Binary PGM (P5); sample values are used directly as heights.
inline ScalarField parse_field_pgm(std::istream& in) {
  if (detail::pgm_token(in) != "P5") fail(ErrorKind::parse, "not a binary PGM (P5) file");
  const auto read_int = [&](const char* what) {
    const auto tok = detail::pgm_token(in);
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v <= 0)
      fail(ErrorKind::parse, std::string("invalid PGM ") + what + " '" + tok + "'");
    return static_cast<std::size_t>(v);
  };
  const std::size_t width = read_int("width");
  const std::size_t height = read_int("height");
  const std::size_t maxval = read_int("maxval");
  if (maxval > 65535) fail(ErrorKind::parse, "PGM maxval exceeds 65535");
  // pgm_token consumed the single whitespace byte after maxval.
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(width * height * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(ErrorKind::parse, "truncated PGM pixel data");
  std::vector<double> values(width * height);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = bytes == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return ScalarField(height, width, std::move(values));
}

inline ScalarField load_field(const std::string& path) {
  const bool pgm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0;
  std::ifstream in(path, pgm ? std::ios::binary : std::ios::in);
  if (!in) fail(ErrorKind::io, "cannot open scalar field " + path);
  try {
    return pgm ? parse_field_pgm(in) : parse_field_csv(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace sparse_tda

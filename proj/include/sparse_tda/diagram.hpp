#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sparse_tda/error.hpp"
#include "sparse_tda/random.hpp"

namespace sparse_tda {

struct DiagramPoint {
  double birth = 0.0;
  double death = 0.0;

  double persistence() const noexcept { return death - birth; }

  friend bool operator==(const DiagramPoint&, const DiagramPoint&) = default;
};

/// Finite multiset of (birth, death) pairs plus essential classes, which
/// never die and are kept apart from the finite points.
class PersistenceDiagram {
 public:
  PersistenceDiagram() = default;

  PersistenceDiagram(std::vector<DiagramPoint> points, std::vector<double> essential = {})
      : points_(std::move(points)), essential_(std::move(essential)) {
    for (const auto& p : points_) {
      require(std::isfinite(p.birth) && std::isfinite(p.death), "diagram point must be finite");
      require(p.death >= p.birth, "diagram point has death < birth");
    }
    for (double b : essential_) require(std::isfinite(b), "essential class birth must be finite");
  }

  const std::vector<DiagramPoint>& points() const noexcept { return points_; }
  const std::vector<double>& essential() const noexcept { return essential_; }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;

 private:
  std::vector<DiagramPoint> points_;
  std::vector<double> essential_;
};

/// A point in birth-persistence coordinates.
struct BirthPersistence {
  double birth = 0.0;
  double persistence = 0.0;

  friend bool operator==(const BirthPersistence&, const BirthPersistence&) = default;
};

using TransformedDiagram = std::vector<BirthPersistence>;

// Essential classes have no finite death and are dropped here.
inline TransformedDiagram to_birth_persistence(const PersistenceDiagram& d) {
  TransformedDiagram out;
  out.reserve(d.size());
  for (const auto& p : d.points()) out.push_back({p.birth, p.death - p.birth});
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

inline bool is_inf_token(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.size() != 3 && tok.size() != 8) return false;
  std::string lower(tok);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "inf" || lower == "infinity";
}

inline bool parse_real(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

inline std::string format_real(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

/// Reads the `.pd` text format: one `<birth> <death>` pair per line, `inf`
/// as death for essential classes, `#` comments and blank lines skipped.
inline PersistenceDiagram parse_diagram(std::istream& in) {
  std::vector<DiagramPoint> points;
  std::vector<double> essential;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;

    const auto where = "line " + std::to_string(lineno) + ": ";
    const auto tokens = detail::split_ws(view);
    if (tokens.size() != 2)
      fail(ErrorKind::parse, where + "expected 2 tokens, found " + std::to_string(tokens.size()));
    double birth = 0.0;
    if (!detail::parse_real(tokens[0], birth))
      fail(ErrorKind::parse, where + "invalid birth '" + std::string(tokens[0]) + "'");
    if (detail::is_inf_token(tokens[1])) {
      essential.push_back(birth);
      continue;
    }
    double death = 0.0;
    if (!detail::parse_real(tokens[1], death))
      fail(ErrorKind::parse, where + "invalid death '" + std::string(tokens[1]) + "'");
    if (death < birth) fail(ErrorKind::validation, where + "death < birth");
    points.push_back({birth, death});
  }
  return PersistenceDiagram(std::move(points), std::move(essential));
}

inline PersistenceDiagram parse_diagram(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_diagram(in);
}

// Finite points first, then essential classes; 17 significant digits so
// that parsing the output reproduces every value bit for bit.
inline void write_diagram(std::ostream& out, const PersistenceDiagram& d) {
  for (const auto& p : d.points())
    out << detail::format_real(p.birth) << ' ' << detail::format_real(p.death) << '\n';
  for (double b : d.essential()) out << detail::format_real(b) << " inf\n";
}

inline std::string serialize_diagram(const PersistenceDiagram& d) {
  std::ostringstream out;
  write_diagram(out, d);
  return out.str();
}

inline PersistenceDiagram load_diagram(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open diagram file " + path);
  try {
    return parse_diagram(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

inline void save_diagram(const std::string& path, const PersistenceDiagram& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write diagram file " + path);
  write_diagram(out, d);
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

struct DiagramCluster {
  double birth_mean = 0.0;
  double death_mean = 0.0;
  double spread = 0.0;  // standard deviation applied to both coordinates
  int count = 0;
};

/// Gaussian clusters in the birth-death plane; deaths are clamped up to the
/// birth so every generated point is valid.
inline PersistenceDiagram synth_diagram(const std::vector<DiagramCluster>& clusters,
                                        std::uint64_t seed) {
  for (const auto& c : clusters) {
    require(std::isfinite(c.birth_mean) && std::isfinite(c.death_mean) && std::isfinite(c.spread),
            "cluster parameters must be finite");
    require(c.spread >= 0.0, "cluster spread must be nonnegative");
    require(c.count >= 0, "cluster count must be nonnegative");
    require(c.death_mean >= c.birth_mean, "cluster mean has death < birth");
  }
  Rng rng(seed);
  std::vector<DiagramPoint> points;
  for (const auto& c : clusters) {
    for (int k = 0; k < c.count; ++k) {
      double b = c.birth_mean;
      double d = c.death_mean;
      if (c.spread > 0.0) {
        b = rng.normal(c.birth_mean, c.spread);
        d = rng.normal(c.death_mean, c.spread);
      }
      points.push_back({b, std::max(b, d)});
    }
  }
  return PersistenceDiagram(std::move(points));
}

}  // namespace sparse_tda

#include <catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "sparse_tda/persistence0.hpp"

using namespace sparse_tda;

namespace {

std::multiset<std::pair<double, double>> positive_points(const PersistenceDiagram& d) {
  std::multiset<std::pair<double, double>> out;
  for (const auto& p : d.points())
    if (p.death > p.birth) out.insert({p.birth, p.death});
  return out;
}

// Components of {v <= t} against essentials born <= t plus finite points
// with birth <= t < death, at every distinct level.
void check_against_flood_fill(const ScalarField& f, int conn) {
  const auto d = sublevel_pd0(f, connectivity_from_int(conn));
  std::vector<double> levels(f.values());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (double t : levels) {
    const int expected = oracle::count_components(oracle::sublevel_components(f, t, conn));
    int alive = 0;
    for (double b : d.essential()) alive += b <= t;
    for (const auto& p : d.points()) alive += p.birth <= t && t < p.death;
    REQUIRE(alive == expected);
  }
  const auto recovered = oracle::diagram_from_ranks(f, conn);
  REQUIRE(positive_points(d) == recovered.finite);
  REQUIRE(std::multiset<double>(d.essential().begin(), d.essential().end()) == recovered.essential);
}

}  // namespace

TEST_CASE("1-D signal example", "[persistence0]") {
  const auto d = sublevel_pd0(ScalarField::signal({3, 1, 2, 0, 5}));
  REQUIRE(d.points() == std::vector<DiagramPoint>{{1, 2}});
  REQUIRE(d.essential() == std::vector<double>{0});
  check_against_flood_fill(ScalarField::signal({3, 1, 2, 0, 5}), 4);
}

TEST_CASE("constant field has a single essential class", "[persistence0]") {
  for (auto [r, c] : {std::pair{1, 1}, {1, 7}, {4, 4}, {3, 9}}) {
    const ScalarField f(r, c, std::vector<double>(r * c, 2.5));
    for (auto conn : {Connectivity::four, Connectivity::eight}) {
      const auto d = sublevel_pd0(f, conn);
      REQUIRE(d.points().empty());
      REQUIRE(d.essential() == std::vector<double>{2.5});
    }
  }
}

TEST_CASE("strictly increasing signal", "[persistence0]") {
  const auto d = sublevel_pd0(ScalarField::signal({-1, 0, 0.5, 3, 10}));
  REQUIRE(d.points().empty());
  REQUIRE(d.essential() == std::vector<double>{-1});
}

TEST_CASE("simultaneous birth and merge emits a zero-persistence point", "[persistence0]") {
  // index 0 is born at 1 and merged into the component of index 2 at 1
  const auto d = sublevel_pd0(ScalarField::signal({1, 1, 0}));
  REQUIRE(d.points() == std::vector<DiagramPoint>{{1, 1}});
  REQUIRE(d.essential() == std::vector<double>{0});
}

TEST_CASE("8-connectivity joins diagonal neighbours", "[persistence0]") {
  const ScalarField f(2, 2, {0, 5, 5, 1});
  const auto d4 = sublevel_pd0(f, Connectivity::four);
  const auto d8 = sublevel_pd0(f, Connectivity::eight);
  REQUIRE(d4.points() == std::vector<DiagramPoint>{{1, 5}});
  // diagonally adjacent to the global minimum, so the 1 never starts a component
  REQUIRE(d8.points().empty());
  REQUIRE(d8.essential() == std::vector<double>{0});
}

TEST_CASE("random fields agree with flood fill", "[persistence0][oracle]") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    const auto alphabet = 2 + rng.below(5);
    std::vector<double> v(r * c);
    for (double& x : v) x = static_cast<double>(rng.below(alphabet));
    const ScalarField f(r, c, v);
    check_against_flood_fill(f, 4);
    check_against_flood_fill(f, 8);
  }
}

TEST_CASE("diagram invariants", "[persistence0][property]") {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(10), c = 1 + rng.below(10);
    std::vector<double> v(r * c);
    for (double& x : v) x = rng.normal();
    const ScalarField f(r, c, v);
    const auto d = sublevel_pd0(f);
    for (const auto& p : d.points()) REQUIRE(p.death >= p.birth);
    REQUIRE(d.essential().size() == 1);
    REQUIRE(d.essential().front() == *std::min_element(v.begin(), v.end()));

    // shifting every value by c shifts every birth and death by exactly c
    const double shift = 4.0;
    std::vector<double> w(v);
    for (double& x : w) x += shift;
    const auto ds = sublevel_pd0(ScalarField(r, c, w));
    REQUIRE(ds.size() == d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      REQUIRE(ds.points()[k].birth == d.points()[k].birth + shift);
      REQUIRE(ds.points()[k].death == d.points()[k].death + shift);
    }
  }
}

TEST_CASE("field readers", "[persistence0][io]") {
  SECTION("csv") {
    std::istringstream in("1, 2,3\n4,5,6\n\n");
    const auto f = parse_field_csv(in);
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 3);
    REQUIRE(f(1, 2) == 6);
    std::istringstream ragged("1,2\n3\n");
    REQUIRE_THROWS_AS(parse_field_csv(ragged), Error);
    std::istringstream bad("1,x\n");
    REQUIRE_THROWS_AS(parse_field_csv(bad), Error);
  }
  SECTION("8-bit pgm") {
    std::string data = "P5\n# comment\n3 2\n255\n";
    for (unsigned char b : {0, 10, 20, 30, 40, 255}) data.push_back(static_cast<char>(b));
    std::istringstream in(data);
    const auto f = parse_field_pgm(in);
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 3);
    REQUIRE(f(0, 1) == 10);
    REQUIRE(f(1, 2) == 255);
  }
  SECTION("16-bit pgm is big-endian") {
    std::string data = "P5 2 1 65535\n";
    for (unsigned char b : {0x01, 0x02, 0xff, 0xff}) data.push_back(static_cast<char>(b));
    std::istringstream in(data);
    const auto f = parse_field_pgm(in);
    REQUIRE(f(0, 0) == 258);
    REQUIRE(f(0, 1) == 65535);
  }
  SECTION("truncated pgm") {
    std::istringstream in("P5 4 4 255\nabc");
    REQUIRE_THROWS_AS(parse_field_pgm(in), Error);
  }
}

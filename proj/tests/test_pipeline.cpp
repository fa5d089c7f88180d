#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sparse_tda/pipeline.hpp"

using namespace sparse_tda;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.pi.rx = cfg.pi.ry = 15;
  cfg.classifier.cv_folds = 4;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("stratified split", "[pipeline][split]") {
  std::vector<int> labels;
  for (int k = 0; k < 20; ++k) labels.push_back(k % 2);
  const auto a = split_dataset(labels, 0.7, 4);
  REQUIRE(a.train.size() == 14);
  REQUIRE(a.test.size() == 6);
  std::size_t ones = 0;
  for (std::size_t idx : a.train) ones += labels[idx];
  REQUIRE(ones == 7);
  const auto b = split_dataset(labels, 0.7, 4);
  REQUIRE(a.train == b.train);
  REQUIRE(a.test == b.test);

  const std::vector<int> six{0, 0, 0, 1, 1, 1};
  const auto half = split_dataset(six, 0.5, 1);
  REQUIRE(half.train.size() == 2);
  REQUIRE(half.test.size() == 4);

  REQUIRE(kind_of([] { split_dataset({0, 0, 1}, 0.7, 1); }) == ErrorKind::configuration);
  REQUIRE(kind_of([&] { split_dataset(labels, 1.0, 1); }) == ErrorKind::configuration);
}

TEST_CASE("predefined splits", "[pipeline][split]") {
  SplitParams params;
  params.predefined = {{{0, 2}, {1, 3}}, {{1, 3}, {2, 0}}};
  const std::vector<int> labels{0, 1, 0, 1};
  REQUIRE(split_for_repeat(labels, params, 0, 9).train == std::vector<std::size_t>{0, 2});
  REQUIRE(split_for_repeat(labels, params, 1, 9).test == std::vector<std::size_t>{0, 2});
  REQUIRE(split_for_repeat(labels, params, 2, 9).train == std::vector<std::size_t>{0, 2});
  params.predefined = {{{0, 1}, {1, 3}}};
  REQUIRE(kind_of([&] { split_for_repeat(labels, params, 0, 9); }) == ErrorKind::configuration);
}

TEST_CASE("manifest parsing", "[pipeline][manifest]") {
  const auto j = ordered_json::parse(R"({
    "entries": [{"path": "a.pd", "label": 1}, {"path": "/abs/b.pgm", "label": 2}],
    "pi": {"resolution": [20, 10], "sigma": "outex", "weighting": "nonlinear"},
    "split": {"train_fraction": 0.6, "seed": 17},
    "classifier": {"kind": "l1-linear", "cv_folds": 5},
    "connectivity": 8,
    "repeats": 3
  })");
  const auto m = parse_manifest(j, "/data/set");
  REQUIRE(m.entries.size() == 2);
  REQUIRE(m.entries[0].path == "/data/set/a.pd");
  REQUIRE(m.entries[1].path == "/abs/b.pgm");
  REQUIRE(m.config.pi.rx == 20);
  REQUIRE(m.config.pi.ry == 10);
  REQUIRE(m.config.pi.sigma == 0.02);
  REQUIRE(m.config.pi.weighting == WeightKind::nonlinear);
  REQUIRE(m.config.split.seed == 17);
  REQUIRE(m.config.classifier.kind == ClassifierKind::l1_linear);
  REQUIRE(m.config.connectivity == Connectivity::eight);
  REQUIRE(m.repeats == std::size_t{3});

  // the configuration survives a JSON round trip
  const auto again = parse_config(config_to_json(m.config));
  REQUIRE(config_to_json(again) == config_to_json(m.config));

  const auto bad = [&](const char* text) {
    return kind_of([&] { parse_manifest(ordered_json::parse(text), "."); });
  };
  REQUIRE(bad(R"({"pi": {}})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "pi": {"sigma": -1}})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "pi": {"sigma": "nope"}})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "classifier": {"kind": "knn"}})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "connectivity": 6})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "split": {"train_fraction": 0}})") == ErrorKind::configuration);
  REQUIRE(bad(R"({"entries": [], "pi": {"domain": [0, 0, 0, 1]}})") == ErrorKind::configuration);
}

TEST_CASE("dataset loading from files", "[pipeline][io]") {
  TempDir dir("sparse_tda_pipeline_load");
  std::ofstream(dir.path / "a.pd") << "0 1\n0.5 2\n";
  std::ofstream(dir.path / "b.pd") << "0.2 0.9\n";
  std::ofstream(dir.path / "c.csv") << "3,1,2,0,5\n";
  std::ofstream(dir.path / "d.csv") << "1,4,2\n";
  std::ofstream(dir.path / "m.json") << R"({"entries": [{"path": "a.pd", "label": 0}, {"path": "b.pd", "label": 0},
    {"path": "c.csv", "label": 1}, {"path": "d.csv", "label": 1}]})";
  const auto m = load_manifest((dir.path / "m.json").string());
  const auto ds = load_dataset(m);
  REQUIRE(ds.diagrams.size() == 4);
  REQUIRE(ds.diagrams[2].points() == std::vector<DiagramPoint>{{1, 2}});

  std::ofstream(dir.path / "missing.json") << R"({"entries": [{"path": "nope.pd", "label": 0}]})";
  REQUIRE(kind_of([&] { load_dataset(load_manifest((dir.path / "missing.json").string())); }) == ErrorKind::io);
  std::ofstream(dir.path / "broken.json") << "{";
  REQUIRE(kind_of([&] { load_manifest((dir.path / "broken.json").string()); }) == ErrorKind::configuration);
  REQUIRE(kind_of([&] { load_manifest((dir.path / "absent.json").string()); }) == ErrorKind::io);
}

TEST_CASE("full-pi and sparse-tda share split and images", "[pipeline]") {
  const auto ds = make_synthetic_dataset(blob_classes(), 10, 3);
  auto cfg = small_config();
  const auto sparse = run_repeat(ds, cfg, 0, 21);
  cfg.classifier.kind = ClassifierKind::full_pi;
  const auto full = run_repeat(ds, cfg, 0, 21);
  REQUIRE(sparse.ok);
  REQUIRE(full.ok);
  REQUIRE(sparse.split.train == full.split.train);
  REQUIRE(sparse.split.test == full.split.test);
  REQUIRE(sparse.fitted->grid == full.fitted->grid);
  REQUIRE(sparse.fitted->weight.normalizer == full.fitted->weight.normalizer);
  REQUIRE(full.s == 225);
  REQUIRE(sparse.s == *sparse.rank);
  REQUIRE(sparse.s < full.s);
  REQUIRE(*full.energy == 1.0);
}

TEST_CASE("single repeat reports zero spread", "[pipeline]") {
  const auto ds = make_synthetic_dataset(blob_classes(), 8, 5);
  const auto report = run_pipeline(ds, small_config(), 1, 3);
  REQUIRE(report.accuracy.stddev == 0.0);
  REQUIRE(report.train_time.stddev == 0.0);
  REQUIRE(summarize({1.0, 3.0}).stddev == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("test diagrams never influence fitting", "[pipeline]") {
  auto ds = make_synthetic_dataset(blob_classes(), 10, 8);
  const auto cfg = small_config();
  const auto before = run_repeat(ds, cfg, 0, 40);
  REQUIRE(before.ok);
  for (std::size_t idx : before.split.test) ds.diagrams[idx] = PersistenceDiagram({{0.0, 50.0}, {-3.0, 9.0}});
  const auto after = run_repeat(ds, cfg, 0, 40);
  REQUIRE(after.ok);
  REQUIRE(after.fitted->grid == before.fitted->grid);
  REQUIRE(after.fitted->selector->pivots == before.fitted->selector->pivots);
  REQUIRE(after.c == before.c);
  REQUIRE(after.gamma == before.gamma);
}

TEST_CASE("reports are deterministic apart from timing", "[pipeline][report]") {
  const auto ds = make_synthetic_dataset(blob_classes(), 8, 11);
  for (auto kind : {ClassifierKind::sparse_tda, ClassifierKind::l1_linear}) {
    auto cfg = small_config();
    cfg.classifier.kind = kind;
    auto a = report_to_json(run_pipeline(ds, cfg, 2, 100));
    auto b = report_to_json(run_pipeline(ds, cfg, 2, 100));
    REQUIRE(a["repeats"][0].contains("train_time_s"));
    strip_timing(a);
    strip_timing(b);
    REQUIRE(a.dump() == b.dump());
    REQUIRE(a.dump().find("train_time") == std::string::npos);

    // accuracy follows from the recorded predictions
    for (const auto& r : a["repeats"]) {
      std::size_t correct = 0;
      for (const auto& p : r["predictions"]) correct += p["label"] == p["predicted"];
      REQUIRE(r["accuracy"].get<double>() == 100.0 * correct / r["predictions"].size());
    }
  }
}

TEST_CASE("report csv", "[pipeline][report]") {
  const auto ds = make_synthetic_dataset(blob_classes(), 8, 2);
  const auto report = run_pipeline(ds, small_config(), 2, 7);
  const auto csv = report_to_csv(report);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);
  REQUIRE(csv.rfind("repeat,seed,status,accuracy,train_time_s", 0) == 0);
}

TEST_CASE("s sweep", "[pipeline][sweep]") {
  const auto ds = make_synthetic_dataset(blob_classes(), 8, 6);
  auto cfg = small_config();
  cfg.pi.rx = cfg.pi.ry = 6;
  const auto rows = sweep_s(ds, cfg, {1, 4, 12, 36}, 1, 3);
  REQUIRE(rows.size() == 4);
  REQUIRE(rows.back().energy == 1.0);
  for (std::size_t k = 1; k < rows.size(); ++k) REQUIRE(rows[k].energy >= rows[k - 1].energy);
  REQUIRE(kind_of([&] { sweep_s(ds, cfg, {37}, 1, 3); }) == ErrorKind::configuration);
  REQUIRE(kind_of([&] { sweep_s(ds, cfg, {0}, 1, 3); }) == ErrorKind::configuration);
  const auto csv = sweep_to_csv(rows);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("synthetic data generation is seeded", "[pipeline]") {
  const auto a = make_synthetic_dataset(blob_classes(), 4, 1);
  const auto b = make_synthetic_dataset(blob_classes(), 4, 1);
  const auto c = make_synthetic_dataset(blob_classes(), 4, 2);
  REQUIRE(a.diagrams == b.diagrams);
  REQUIRE(a.labels == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3});
  REQUIRE(!(a.diagrams == c.diagrams));
}

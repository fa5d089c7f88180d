#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparse_tda/diagram.hpp"
#include "sparse_tda/linear.hpp"
#include "sparse_tda/persistence0.hpp"
#include "sparse_tda/pimage.hpp"
#include "sparse_tda/sparse.hpp"
#include "sparse_tda/svm.hpp"

namespace sparse_tda {

using ordered_json = nlohmann::ordered_json;

enum class ClassifierKind { sparse_tda, l1_linear, full_pi };

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
  if (s == "sparse-tda") return ClassifierKind::sparse_tda;
  if (s == "l1-linear") return ClassifierKind::l1_linear;
  if (s == "full-pi") return ClassifierKind::full_pi;
  fail(ErrorKind::configuration, "unknown classifier kind '" + s + "'");
}

inline const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::sparse_tda: return "sparse-tda";
    case ClassifierKind::l1_linear: return "l1-linear";
    default: return "full-pi";
  }
}

struct PiParams {
  std::size_t rx = 30;
  std::size_t ry = 30;
  double sigma = 0.1;
  WeightKind weighting = WeightKind::linear;
  double pad_sigmas = 3.0;
  std::optional<PiGrid> domain;       // fixed grid instead of fitting one to training data
  std::optional<double> normalizer;   // fixed weight normalizer
};

struct PredefinedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitParams {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::vector<PredefinedSplit> predefined;  // used round-robin by repeat when present
};

struct ClassifierParams {
  ClassifierKind kind = ClassifierKind::sparse_tda;
  std::optional<std::size_t> s_override;
  std::size_t cv_folds = 10;
  double tolerance = 1e-3;     // SMO KKT tolerance
  double l1_tolerance = 1e-4;  // relative objective decrease for coordinate descent
};

/// Everything in a manifest except the list of input files.
struct PipelineConfig {
  PiParams pi;
  SplitParams split;
  ClassifierParams classifier;
  Connectivity connectivity = Connectivity::four;
};

struct ManifestEntry {
  std::string path;
  int label = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  PipelineConfig config;
  std::optional<std::size_t> repeats;
};

struct Dataset {
  std::vector<PersistenceDiagram> diagrams;
  std::vector<int> labels;
};

/// Preset PI widths for the three benchmark settings the method was
/// originally tuned on, plus the synthetic default.
inline double sigma_preset(const std::string& name) {
  if (name == "shrec14-synthetic") return 0.2;
  if (name == "shrec14-real") return 0.0001;
  if (name == "outex") return 0.02;
  if (name == "synthetic") return 0.1;
  fail(ErrorKind::configuration, "unknown sigma preset '" + name + "'");
}

namespace detail {

template <typename T>
T json_get(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::configuration, std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline PipelineConfig parse_config(const ordered_json& j) {
  PipelineConfig cfg;
  if (j.contains("pi")) {
    const auto& pi = j.at("pi");
    if (pi.contains("resolution")) {
      const auto& r = pi.at("resolution");
      if (r.is_array()) {
        if (r.size() != 2) fail(ErrorKind::configuration, "pi.resolution must be [rx, ry] or a single integer");
        cfg.pi.rx = r[0].get<std::size_t>();
        cfg.pi.ry = r[1].get<std::size_t>();
      } else {
        cfg.pi.rx = cfg.pi.ry = r.get<std::size_t>();
      }
    }
    if (pi.contains("sigma") && pi.at("sigma").is_string()) cfg.pi.sigma = sigma_preset(pi.at("sigma").get<std::string>());
    else cfg.pi.sigma = detail::json_get(pi, "sigma", cfg.pi.sigma);
    cfg.pi.weighting = weight_kind_from_string(detail::json_get<std::string>(pi, "weighting", "linear"));
    cfg.pi.pad_sigmas = detail::json_get(pi, "pad_sigmas", cfg.pi.pad_sigmas);
    if (pi.contains("domain") && !pi.at("domain").is_null()) {
      const auto d = pi.at("domain").get<std::vector<double>>();
      if (d.size() != 4) fail(ErrorKind::configuration, "pi.domain must be [x_min, x_max, y_min, y_max]");
      cfg.pi.domain = PiGrid{cfg.pi.rx, cfg.pi.ry, d[0], d[1], d[2], d[3]};
    }
    if (pi.contains("normalizer") && !pi.at("normalizer").is_null()) cfg.pi.normalizer = pi.at("normalizer").get<double>();
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    cfg.split.train_fraction = detail::json_get(s, "train_fraction", cfg.split.train_fraction);
    cfg.split.seed = detail::json_get<std::uint64_t>(s, "seed", cfg.split.seed);
    if (s.contains("predefined"))
      for (const auto& p : s.at("predefined"))
        cfg.split.predefined.push_back(
            {p.at("train").get<std::vector<std::size_t>>(), p.at("test").get<std::vector<std::size_t>>()});
  }
  if (j.contains("classifier")) {
    const auto& c = j.at("classifier");
    cfg.classifier.kind = classifier_kind_from_string(detail::json_get<std::string>(c, "kind", "sparse-tda"));
    if (c.contains("s_override") && !c.at("s_override").is_null())
      cfg.classifier.s_override = c.at("s_override").get<std::size_t>();
    cfg.classifier.cv_folds = detail::json_get(c, "cv_folds", cfg.classifier.cv_folds);
    cfg.classifier.tolerance = detail::json_get(c, "tolerance", cfg.classifier.tolerance);
    cfg.classifier.l1_tolerance = detail::json_get(c, "l1_tolerance", cfg.classifier.l1_tolerance);
  }
  cfg.connectivity = connectivity_from_int(detail::json_get(j, "connectivity", 4));

  if (cfg.pi.rx < 1 || cfg.pi.ry < 1) fail(ErrorKind::configuration, "pi.resolution must be positive");
  if (!(cfg.pi.sigma > 0.0)) fail(ErrorKind::configuration, "pi.sigma must be positive");
  if (!(cfg.pi.pad_sigmas >= 0.0)) fail(ErrorKind::configuration, "pi.pad_sigmas must be nonnegative");
  if (cfg.pi.normalizer && !(*cfg.pi.normalizer > 0.0)) fail(ErrorKind::configuration, "pi.normalizer must be positive");
  if (cfg.pi.domain) {
    try {
      cfg.pi.domain->validate();
    } catch (const Error& e) {
      fail(ErrorKind::configuration, std::string("pi.domain: ") + e.what());
    }
  }
  if (!(cfg.split.train_fraction > 0.0 && cfg.split.train_fraction < 1.0))
    fail(ErrorKind::configuration, "split.train_fraction must lie in (0, 1)");
  if (cfg.classifier.cv_folds < 2) fail(ErrorKind::configuration, "classifier.cv_folds must be at least 2");
  if (!(cfg.classifier.tolerance > 0.0) || !(cfg.classifier.l1_tolerance > 0.0))
    fail(ErrorKind::configuration, "classifier tolerances must be positive");
  if (cfg.classifier.s_override && *cfg.classifier.s_override < 1)
    fail(ErrorKind::configuration, "classifier.s_override must be at least 1");
  return cfg;
}

inline ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json pi = {{"resolution", {cfg.pi.rx, cfg.pi.ry}},
                     {"sigma", cfg.pi.sigma},
                     {"weighting", to_string(cfg.pi.weighting)},
                     {"pad_sigmas", cfg.pi.pad_sigmas}};
  if (cfg.pi.domain) pi["domain"] = {cfg.pi.domain->x_min, cfg.pi.domain->x_max, cfg.pi.domain->y_min, cfg.pi.domain->y_max};
  if (cfg.pi.normalizer) pi["normalizer"] = *cfg.pi.normalizer;
  ordered_json split = {{"train_fraction", cfg.split.train_fraction}, {"seed", cfg.split.seed}};
  if (!cfg.split.predefined.empty()) {
    split["predefined"] = ordered_json::array();
    for (const auto& p : cfg.split.predefined) split["predefined"].push_back({{"train", p.train}, {"test", p.test}});
  }
  ordered_json cls = {{"kind", to_string(cfg.classifier.kind)},
                      {"s_override", nullptr},
                      {"cv_folds", cfg.classifier.cv_folds},
                      {"tolerance", cfg.classifier.tolerance},
                      {"l1_tolerance", cfg.classifier.l1_tolerance}};
  if (cfg.classifier.s_override) cls["s_override"] = *cfg.classifier.s_override;
  return {{"pi", pi}, {"split", split}, {"classifier", cls}, {"connectivity", static_cast<int>(cfg.connectivity)}};
}

inline DatasetManifest parse_manifest(const ordered_json& j, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  if (!j.is_object()) fail(ErrorKind::configuration, "manifest must be a JSON object");
  if (!j.contains("entries") || !j.at("entries").is_array())
    fail(ErrorKind::configuration, "manifest needs an 'entries' array");
  for (const auto& e : j.at("entries")) {
    if (!e.contains("path") || !e.contains("label"))
      fail(ErrorKind::configuration, "manifest entries need 'path' and 'label'");
    std::filesystem::path p = e.at("path").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    m.entries.push_back({p.lexically_normal().string(), e.at("label").get<int>()});
  }
  m.config = parse_config(j);
  if (j.contains("repeats") && !j.at("repeats").is_null()) {
    m.repeats = j.at("repeats").get<std::size_t>();
    if (*m.repeats < 1) fail(ErrorKind::configuration, "repeats must be at least 1");
  }
  return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::configuration, path + ": invalid JSON: " + e.what());
  }
  try {
    return parse_manifest(j, std::filesystem::path(path).parent_path());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::configuration, path + ": " + e.what());
  }
}

inline bool is_field_path(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".csv" || ext == ".pgm";
}

/// `.pd` files are read as diagrams; `.csv` and `.pgm` files are scalar
/// fields reduced to their 0-dimensional sublevel diagram.
inline PersistenceDiagram load_input(const std::string& path, Connectivity connectivity) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::io, "input file not found: " + path);
  if (is_field_path(path)) return sublevel_pd0(load_field(path), connectivity);
  return load_diagram(path);
}

inline void check_class_sizes(const std::vector<int>& labels) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) fail(ErrorKind::configuration, "dataset needs at least two classes");
  for (const auto& [label, count] : counts)
    if (count < 2)
      fail(ErrorKind::configuration, "class " + std::to_string(label) + " has fewer than 2 entries");
}

inline Dataset load_dataset(const DatasetManifest& m) {
  Dataset ds;
  for (const auto& e : m.entries) {
    ds.diagrams.push_back(load_input(e.path, m.config.connectivity));
    ds.labels.push_back(e.label);
  }
  check_class_sizes(ds.labels);
  return ds;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split: every class contributes floor(fraction * count)
/// training members (at least one), the rest go to test. Both index lists
/// are returned in ascending order.
inline Split split_dataset(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  check_class_sizes(labels);
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorKind::configuration, "train fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t t = 0; t < labels.size(); ++t) members[labels[t]].push_back(t);
  Rng rng(seed);
  Split out;
  for (auto& [label, idx] : members) {
    rng.shuffle(std::span<std::size_t>(idx));
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(idx.size()) + 1e-9)));
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline Split split_for_repeat(const std::vector<int>& labels, const SplitParams& params, std::size_t repeat,
                              std::uint64_t seed) {
  if (params.predefined.empty()) return split_dataset(labels, params.train_fraction, seed);
  const auto& p = params.predefined[repeat % params.predefined.size()];
  std::vector<char> seen(labels.size(), 0);
  for (const auto* list : {&p.train, &p.test})
    for (std::size_t idx : *list) {
      if (idx >= labels.size() || seen[idx]) fail(ErrorKind::configuration, "predefined split is not a partition");
      seen[idx] = 1;
    }
  Split out{p.train, p.test};
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Everything fitted on the training diagrams of one repeat.
struct FittedPipeline {
  ClassifierKind kind = ClassifierKind::sparse_tda;
  WeightSpec weight;
  PiGrid grid;
  double sigma = 0.1;
  std::optional<FeatureSelector> selector;
  std::optional<SvmModel> svm;
  std::optional<L1Model> l1;
  double c = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;

  std::vector<double> features(const PersistenceDiagram& d) const {
    auto v = vectorize(rasterize(to_birth_persistence(d), grid, weight, sigma));
    return selector ? sample(*selector, v) : v;
  }

  int predict(const PersistenceDiagram& d) const {
    const auto x = features(d);
    return svm ? sparse_tda::predict(*svm, x) : sparse_tda::predict(*l1, x);
  }
};

inline std::vector<double> l1_cost_grid() { return linspace(-5.0, 15.0, 50); }

/// Fits weighting, grid, selector and classifier from training data only.
inline FittedPipeline fit_pipeline(const std::vector<PersistenceDiagram>& train, const std::vector<int>& labels,
                                   const PipelineConfig& cfg, std::uint64_t seed) {
  FittedPipeline fp;
  fp.kind = cfg.classifier.kind;
  fp.sigma = cfg.pi.sigma;
  fp.weight = cfg.pi.normalizer ? WeightSpec{cfg.pi.weighting, *cfg.pi.normalizer}
                                : fit_weight(cfg.pi.weighting, train);
  std::vector<TransformedDiagram> transformed;
  transformed.reserve(train.size());
  for (const auto& d : train) transformed.push_back(to_birth_persistence(d));
  fp.grid = cfg.pi.domain ? *cfg.pi.domain : fit_grid(transformed, cfg.pi.rx, cfg.pi.ry, cfg.pi.pad_sigmas * cfg.pi.sigma);

  const std::size_t p = fp.grid.pixel_count();
  Matrix x(p, train.size());
  for (std::size_t t = 0; t < transformed.size(); ++t) {
    const auto img = rasterize(transformed[t], fp.grid, fp.weight, fp.sigma);
    std::copy(img.pixels().begin(), img.pixels().end(), x.col(t).begin());
  }

  LabeledSet data;
  data.labels = labels;
  if (fp.kind == ClassifierKind::l1_linear) {
    for (std::size_t t = 0; t < train.size(); ++t) data.vectors.emplace_back(x.col(t).begin(), x.col(t).end());
    const L1Options opt{cfg.classifier.l1_tolerance};
    const auto grid = l1_cost_grid();
    const auto search = tune_l1(data, grid, cfg.classifier.cv_folds, seed, opt);
    fp.l1 = train_l1(data, search.c, opt);
    fp.c = search.c;
    fp.cv_accuracy = search.cv_accuracy;
    return fp;
  }

  const auto s_override = fp.kind == ClassifierKind::full_pi ? std::optional<std::size_t>(p) : cfg.classifier.s_override;
  fp.selector = fit_selector(x, s_override);
  for (std::size_t t = 0; t < train.size(); ++t) data.vectors.push_back(sample(*fp.selector, x.col(t)));
  GridSearchSpec spec;
  spec.folds = cfg.classifier.cv_folds;
  spec.seed = seed;
  spec.smo.tol = cfg.classifier.tolerance;
  const auto search = grid_search(data, spec);
  fp.svm = train_csvc(data, search.c, search.gamma, spec.smo);
  fp.c = search.c;
  fp.gamma = search.gamma;
  fp.cv_accuracy = search.cv_accuracy;
  return fp;
}

struct Prediction {
  std::size_t index = 0;
  int label = 0;
  int predicted = 0;
};

struct RepeatResult {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ErrorKind error_kind = ErrorKind::validation;
  double accuracy = 0.0;       // percent
  double train_time_s = 0.0;
  std::size_t s = 0;
  std::optional<std::size_t> rank;
  double c = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
  std::optional<double> energy;
  Split split;
  std::vector<Prediction> predictions;
  std::optional<FittedPipeline> fitted;
};

inline RepeatResult run_repeat(const Dataset& ds, const PipelineConfig& cfg, std::size_t repeat, std::uint64_t seed) {
  RepeatResult res;
  res.repeat = repeat;
  res.seed = seed;
  try {
    res.split = split_for_repeat(ds.labels, cfg.split, repeat, seed);
    std::vector<PersistenceDiagram> train;
    std::vector<int> train_labels;
    for (std::size_t idx : res.split.train) {
      train.push_back(ds.diagrams[idx]);
      train_labels.push_back(ds.labels[idx]);
    }
    const auto start = std::chrono::steady_clock::now();
    auto fitted = fit_pipeline(train, train_labels, cfg, seed);
    res.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::size_t correct = 0;
    for (std::size_t idx : res.split.test) {
      const int guess = fitted.predict(ds.diagrams[idx]);
      res.predictions.push_back({idx, ds.labels[idx], guess});
      if (guess == ds.labels[idx]) ++correct;
    }
    res.accuracy = res.split.test.empty() ? 0.0
                                          : 100.0 * static_cast<double>(correct) / static_cast<double>(res.split.test.size());
    if (fitted.selector) {
      res.s = fitted.selector->s;
      res.rank = fitted.selector->rank;
      res.energy = energy(fitted.selector->singular_values, fitted.selector->s);
    } else {
      res.s = fitted.grid.pixel_count();
    }
    res.c = fitted.c;
    res.gamma = fitted.gamma;
    res.cv_accuracy = fitted.cv_accuracy;
    res.fitted = std::move(fitted);
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.error = e.what();
    res.error_kind = e.kind();
  }
  return res;
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

// Sample standard deviation; a single observation reports 0.
inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return s;
}

struct RunReport {
  PipelineConfig config;
  std::uint64_t base_seed = 0;
  std::size_t repeats_requested = 0;
  std::vector<RepeatResult> repeats;
  Summary accuracy;
  Summary train_time;

  std::size_t successful() const {
    return static_cast<std::size_t>(std::count_if(repeats.begin(), repeats.end(), [](const auto& r) { return r.ok; }));
  }
};

/// Repeat r uses seed base_seed + r for its split, folds and tuning.
inline RunReport run_pipeline(const Dataset& ds, const PipelineConfig& cfg, std::size_t repeats, std::uint64_t base_seed) {
  if (repeats < 1) fail(ErrorKind::configuration, "repeats must be at least 1");
  check_class_sizes(ds.labels);
  require(ds.diagrams.size() == ds.labels.size(), "diagram and label counts differ");
  RunReport report;
  report.config = cfg;
  report.base_seed = base_seed;
  report.repeats_requested = repeats;
  std::vector<double> acc, time;
  for (std::size_t r = 0; r < repeats; ++r) {
    report.repeats.push_back(run_repeat(ds, cfg, r, base_seed + r));
    const auto& res = report.repeats.back();
    if (res.ok) {
      acc.push_back(res.accuracy);
      time.push_back(res.train_time_s);
    }
  }
  if (acc.empty()) {
    const auto& first = report.repeats.front();
    fail(first.error_kind, "no repeat succeeded; first error: " + first.error);
  }
  report.accuracy = summarize(acc);
  report.train_time = summarize(time);
  return report;
}

/// Keys that carry wall-clock measurements; everything else in a report is
/// a deterministic function of the data, configuration and seed.
inline const std::vector<std::string>& timing_keys() {
  static const std::vector<std::string> keys{"train_time_s", "train_time_mean_s", "train_time_std_s"};
  return keys;
}

inline ordered_json report_to_json(const RunReport& report) {
  ordered_json j;
  j["config"] = config_to_json(report.config);
  j["base_seed"] = report.base_seed;
  j["repeats"] = ordered_json::array();
  for (const auto& r : report.repeats) {
    ordered_json e;
    e["repeat"] = r.repeat;
    e["seed"] = r.seed;
    e["status"] = r.ok ? "ok" : "error";
    if (!r.ok) {
      e["error"] = r.error;
      j["repeats"].push_back(e);
      continue;
    }
    e["accuracy"] = r.accuracy;
    e["train_time_s"] = r.train_time_s;
    e["s"] = r.s;
    e["r_o"] = r.rank ? ordered_json(*r.rank) : ordered_json(nullptr);
    e["C"] = r.c;
    e["gamma"] = r.gamma;
    e["cv_accuracy"] = r.cv_accuracy;
    e["energy"] = r.energy ? ordered_json(*r.energy) : ordered_json(nullptr);
    if (r.fitted) {
      const auto& g = r.fitted->grid;
      e["grid"] = {{"resolution", {g.rx, g.ry}}, {"domain", {g.x_min, g.x_max, g.y_min, g.y_max}}};
      e["weight_normalizer"] = r.fitted->weight.normalizer;
    }
    e["n_train"] = r.split.train.size();
    e["n_test"] = r.split.test.size();
    e["train_indices"] = r.split.train;
    e["test_indices"] = r.split.test;
    e["predictions"] = ordered_json::array();
    for (const auto& p : r.predictions)
      e["predictions"].push_back({{"index", p.index}, {"label", p.label}, {"predicted", p.predicted}});
    j["repeats"].push_back(e);
  }
  j["aggregate"] = {{"repeats", report.repeats_requested},
                    {"successful", report.successful()},
                    {"accuracy_mean", report.accuracy.mean},
                    {"accuracy_std", report.accuracy.stddev},
                    {"train_time_mean_s", report.train_time.mean},
                    {"train_time_std_s", report.train_time.stddev}};
  return j;
}

inline void strip_timing(ordered_json& j) {
  if (j.is_object()) {
    for (const auto& k : timing_keys()) j.erase(k);
    for (auto& [key, value] : j.items()) strip_timing(value);
  } else if (j.is_array()) {
    for (auto& v : j) strip_timing(v);
  }
}

inline std::string report_to_csv(const RunReport& report) {
  std::ostringstream out;
  out << "repeat,seed,status,accuracy,train_time_s,s,r_o,C,gamma,cv_accuracy,energy\n";
  for (const auto& r : report.repeats) {
    out << r.repeat << ',' << r.seed << ',' << (r.ok ? "ok" : "error");
    if (r.ok) {
      out << ',' << detail::format_real(r.accuracy) << ',' << detail::format_real(r.train_time_s) << ',' << r.s << ','
          << (r.rank ? std::to_string(*r.rank) : std::string()) << ',' << detail::format_real(r.c) << ','
          << detail::format_real(r.gamma) << ',' << detail::format_real(r.cv_accuracy) << ','
          << (r.energy ? detail::format_real(*r.energy) : std::string());
    } else {
      out << ",,,,,,,,";
    }
    out << '\n';
  }
  return out.str();
}

struct SweepRow {
  std::size_t s = 0;
  Summary accuracy;
  Summary train_time;
  double energy = 0.0;
  std::size_t successful = 0;
};

/// One sparse-tda pipeline run per (s, repeat); energy is the spectral
/// fraction captured by the first s singular values of each repeat's
/// training matrix, averaged over repeats. Runs are interleaved (every s
/// for repeat 0, then every s for repeat 1, ...) so that slow periods of
/// the machine spread evenly over the s values instead of biasing one.
inline std::vector<SweepRow> sweep_s(const Dataset& ds, PipelineConfig cfg, const std::vector<std::size_t>& s_values,
                                     std::size_t repeats, std::uint64_t base_seed) {
  if (repeats < 1) fail(ErrorKind::configuration, "repeats must be at least 1");
  if (s_values.empty()) fail(ErrorKind::configuration, "sweep needs at least one s value");
  const std::size_t p = cfg.pi.domain ? cfg.pi.domain->pixel_count() : cfg.pi.rx * cfg.pi.ry;
  for (std::size_t s : s_values)
    if (s < 1 || s > p) fail(ErrorKind::configuration, "s value " + std::to_string(s) + " outside [1, p]");
  check_class_sizes(ds.labels);
  cfg.classifier.kind = ClassifierKind::sparse_tda;

  const std::size_t m = s_values.size();
  std::vector<std::vector<double>> acc(m), time(m), energies(m);
  std::vector<const RepeatResult*> first_failure(m, nullptr);
  std::vector<RepeatResult> failures;
  failures.reserve(m);
  for (std::size_t r = 0; r < repeats; ++r)
    for (std::size_t k = 0; k < m; ++k) {
      cfg.classifier.s_override = s_values[k];
      auto res = run_repeat(ds, cfg, r, base_seed + r);
      if (res.ok) {
        acc[k].push_back(res.accuracy);
        time[k].push_back(res.train_time_s);
        energies[k].push_back(*res.energy);
      } else if (!first_failure[k]) {
        failures.push_back(std::move(res));
        first_failure[k] = &failures.back();
      }
    }

  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < m; ++k) {
    if (acc[k].empty())
      fail(first_failure[k]->error_kind, "no repeat succeeded at s = " + std::to_string(s_values[k]) +
                                             "; first error: " + first_failure[k]->error);
    SweepRow row;
    row.s = s_values[k];
    row.accuracy = summarize(acc[k]);
    row.train_time = summarize(time[k]);
    row.successful = acc[k].size();
    row.energy = summarize(energies[k]).mean;
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "s,accuracy_mean,accuracy_std,train_time_mean_s,train_time_std_s,energy,successful\n";
  for (const auto& r : rows)
    out << r.s << ',' << detail::format_real(r.accuracy.mean) << ',' << detail::format_real(r.accuracy.stddev) << ','
        << detail::format_real(r.train_time.mean) << ',' << detail::format_real(r.train_time.stddev) << ','
        << detail::format_real(r.energy) << ',' << r.successful << '\n';
  return out.str();
}

/// Per-class cluster recipe for synthetic datasets.
struct SyntheticClass {
  int label = 0;
  std::vector<DiagramCluster> clusters;
};

/// `per_class` diagrams for every class; diagram k of class c is generated
/// with a seed derived from (seed, c, k).
inline Dataset make_synthetic_dataset(const std::vector<SyntheticClass>& classes, std::size_t per_class,
                                      std::uint64_t seed) {
  Dataset ds;
  Rng seeder(seed);
  for (const auto& cls : classes)
    for (std::size_t k = 0; k < per_class; ++k) {
      ds.diagrams.push_back(synth_diagram(cls.clusters, seeder.next()));
      ds.labels.push_back(cls.label);
    }
  return ds;
}

/// Three classes, each with its own tight cluster of features plus a
/// shared background of short-lived noise.
inline std::vector<SyntheticClass> blob_classes() {
  const DiagramCluster background{0.5, 0.7, 0.15, 12};
  return {
      {1, {{0.3, 1.3, 0.05, 6}, background}},
      {2, {{1.2, 1.9, 0.05, 6}, background}},
      {3, {{0.6, 2.6, 0.05, 6}, background}},
  };
}

}  // namespace sparse_tda

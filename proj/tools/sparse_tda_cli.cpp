// Command-line driver for the sparse persistence-image pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sparse_tda/sparse_tda.hpp"

namespace fs = std::filesystem;
using namespace sparse_tda;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = std::string(detail::trim(tok));
    if (tok.empty()) continue;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail(ErrorKind::configuration, "invalid integer '" + tok + "' in --values");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorKind::configuration, "--values is empty");
  return out;
}

int cmd_run(const std::string& manifest_path, std::optional<std::size_t> repeats, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  const auto manifest = load_manifest(manifest_path);
  const auto ds = load_dataset(manifest);
  const std::size_t n = repeats.value_or(manifest.repeats.value_or(30));
  const std::uint64_t base = seed.value_or(manifest.config.split.seed);
  const auto report = run_pipeline(ds, manifest.config, n, base);

  for (const auto& r : report.repeats) {
    if (r.ok)
      std::printf("repeat %3zu  seed %llu  accuracy %6.2f%%  time %.3fs  s=%zu\n", r.repeat,
                  static_cast<unsigned long long>(r.seed), r.accuracy, r.train_time_s, r.s);
    else
      std::printf("repeat %3zu  seed %llu  FAILED: %s\n", r.repeat, static_cast<unsigned long long>(r.seed),
                  r.error.c_str());
  }
  std::printf("accuracy %.2f +/- %.2f %%  training time %.3f +/- %.3f s  (%zu/%zu repeats)\n", report.accuracy.mean,
              report.accuracy.stddev, report.train_time.mean, report.train_time.stddev, report.successful(),
              report.repeats_requested);

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    ensure_dir(dir);
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(dir / "report.csv", report_to_csv(report));
    for (const auto& r : report.repeats) {
      if (!r.ok || !r.fitted) continue;
      char name[32];
      std::snprintf(name, sizeof name, "repeat_%03zu", r.repeat);
      const fs::path rdir = dir / name;
      ensure_dir(rdir);
      if (r.fitted->selector) save_selector((rdir / "selector.bin").string(), *r.fitted->selector);
      if (r.fitted->svm) save_model((rdir / "model.bin").string(), *r.fitted->svm);
    }
  }
  return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& values, std::optional<std::size_t> repeats,
              std::optional<std::uint64_t> seed, const std::string& out_path) {
  const auto manifest = load_manifest(manifest_path);
  const auto ds = load_dataset(manifest);
  const auto rows = sweep_s(ds, manifest.config, parse_size_list(values), repeats.value_or(manifest.repeats.value_or(30)),
                            seed.value_or(manifest.config.split.seed));
  const auto csv = sweep_to_csv(rows);
  if (out_path.empty()) std::cout << csv;
  else write_text(out_path, csv);
  return 0;
}

int cmd_pd(const std::string& field_path, int connectivity, const std::string& out_path) {
  const auto conn = connectivity_from_int(connectivity);
  const auto diagram = sublevel_pd0(load_field(field_path), conn);
  if (out_path.empty()) write_diagram(std::cout, diagram);
  else save_diagram(out_path, diagram);
  return 0;
}

// Weighting and grid come from the manifest when fixed there, otherwise
// from the training part of the first repeat's split.
int cmd_pi(const std::string& diagram_path, const std::string& config_path, const std::string& out_path) {
  const auto manifest = load_manifest(config_path);
  const auto& cfg = manifest.config;
  const auto diagram = load_input(diagram_path, cfg.connectivity);

  WeightSpec spec{cfg.pi.weighting, cfg.pi.normalizer.value_or(0.0)};
  std::optional<PiGrid> grid = cfg.pi.domain;
  if (!cfg.pi.normalizer || !grid) {
    const auto ds = load_dataset(manifest);
    const auto split = split_for_repeat(ds.labels, cfg.split, 0, cfg.split.seed);
    std::vector<PersistenceDiagram> train;
    std::vector<TransformedDiagram> transformed;
    for (std::size_t idx : split.train) {
      train.push_back(ds.diagrams[idx]);
      transformed.push_back(to_birth_persistence(ds.diagrams[idx]));
    }
    if (!cfg.pi.normalizer) spec = fit_weight(cfg.pi.weighting, train);
    if (!grid) grid = fit_grid(transformed, cfg.pi.rx, cfg.pi.ry, cfg.pi.pad_sigmas * cfg.pi.sigma);
  }
  const auto image = rasterize(to_birth_persistence(diagram), *grid, spec, cfg.pi.sigma);
  const auto ext = fs::path(out_path).extension().string();
  if (out_path.empty()) write_image_csv(std::cout, image);
  else if (ext == ".pgm") save_image_pgm(out_path, image);
  else if (ext == ".csv") save_image_csv(out_path, image);
  else fail(ErrorKind::configuration, "--out must end in .csv or .pgm");
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto sel = load_selector(path);
  std::printf("pixels (p)        %zu\n", sel.pixel_count());
  std::printf("optimal rank r_o  %zu\n", sel.rank);
  std::printf("samples (s)       %zu\n", sel.s);
  std::printf("components        %zu x %zu\n", sel.components.rows(), sel.components.cols());
  std::printf("energy at s       %.6f\n", energy(sel.singular_values, sel.s));
  std::printf("singular values  ");
  for (std::size_t k = 0; k < std::min<std::size_t>(sel.singular_values.size(), 10); ++k)
    std::printf(" %.6g", sel.singular_values[k]);
  if (sel.singular_values.size() > 10) std::printf(" ... (%zu total)", sel.singular_values.size());
  std::printf("\nselected pixels  ");
  for (std::size_t idx : sel.selected()) std::printf(" %zu", idx);
  std::printf("\n");
  return 0;
}

int cmd_synth(const std::string& out_dir, std::size_t per_class, std::uint64_t seed) {
  const fs::path dir(out_dir);
  ensure_dir(dir);
  const auto ds = make_synthetic_dataset(blob_classes(), per_class, seed);
  ordered_json manifest;
  manifest["entries"] = ordered_json::array();
  for (std::size_t k = 0; k < ds.diagrams.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "d%04zu.pd", k);
    save_diagram((dir / name).string(), ds.diagrams[k]);
    manifest["entries"].push_back({{"path", name}, {"label", ds.labels[k]}});
  }
  PipelineConfig cfg;
  cfg.split.seed = seed;
  const auto config = config_to_json(cfg);
  for (const auto& [key, value] : config.items()) manifest[key] = value;
  manifest["repeats"] = 30;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::printf("wrote %zu diagrams and manifest.json to %s\n", ds.diagrams.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse persistence-image features and SVM classification"};
  app.require_subcommand(1);

  std::string manifest_path, out, values, input, config;
  std::optional<std::size_t> repeats;
  std::optional<std::uint64_t> seed;
  int connectivity = 4;
  std::size_t per_class = 30;
  std::uint64_t synth_seed = 1;

  auto* run = app.add_subcommand("run", "Run the pipeline on a dataset manifest");
  run->add_option("manifest", manifest_path, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--repeats", repeats, "Number of repeats (default: manifest value or 30)");
  run->add_option("--seed", seed, "Base seed (default: manifest split.seed)");
  run->add_option("--out", out, "Directory for report.json, report.csv and fitted binaries");

  auto* sweep = app.add_subcommand("sweep-s", "Sweep the number of sampled pixels");
  sweep->add_option("manifest", manifest_path, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--values", values, "Comma-separated s values")->required();
  sweep->add_option("--repeats", repeats, "Repeats per s value (default: manifest value or 30)");
  sweep->add_option("--seed", seed, "Base seed (default: manifest split.seed)");
  sweep->add_option("--out", out, "CSV output path (default: stdout)");

  auto* pd = app.add_subcommand("pd", "0-dimensional sublevel persistence of a scalar field (.csv or .pgm)");
  pd->add_option("field", input, "Scalar field file")->required()->check(CLI::ExistingFile);
  pd->add_option("--connectivity", connectivity, "Grid connectivity")->check(CLI::IsMember({4, 8}));
  pd->add_option("--out", out, "Output .pd path (default: stdout)");

  auto* pi = app.add_subcommand("pi", "Rasterize one diagram into a persistence image");
  pi->add_option("diagram", input, "Diagram (.pd) or scalar field")->required()->check(CLI::ExistingFile);
  pi->add_option("--config", config, "Manifest supplying PI parameters")->required()->check(CLI::ExistingFile);
  pi->add_option("--out", out, "Output .csv or .pgm (default: CSV on stdout)");

  auto* inspect = app.add_subcommand("inspect-selector", "Print a persisted pixel selector");
  inspect->add_option("file", input, "Selector binary")->required()->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "Write a synthetic three-class diagram dataset with a manifest");
  synth->add_option("dir", out, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Diagrams per class");
  synth->add_option("--seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(manifest_path, repeats, seed, out);
    if (*sweep) return cmd_sweep(manifest_path, values, repeats, seed, out);
    if (*pd) return cmd_pd(input, connectivity, out);
    if (*pi) return cmd_pi(input, config, out);
    if (*inspect) return cmd_inspect(input);
    if (*synth) return cmd_synth(out, per_class, synth_seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

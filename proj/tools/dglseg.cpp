// Command-line front end: segment, bench, synth, bounds, serve.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dglseg.hpp"
#include "dglseg/service.hpp"

namespace fs = std::filesystem;
using namespace dglseg;

namespace {

struct SharedFlags {
  std::string config_path;
  std::optional<std::string> colorspace;
  std::vector<int> bins;
  bool reduce_to_linear = false;
  std::optional<int> superpixels;
  std::optional<double> compactness;
  std::vector<std::string> regimes;
  std::optional<std::uint64_t> seed;
  std::optional<double> exclusion;
  std::optional<int> click_cost;
  std::optional<int> workers;
  bool lab_superpixels = false;
};

void add_shared_flags(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config_path, "Run config JSON (flags override its keys)")->check(CLI::ExistingFile);
  cmd->add_option("--colorspace", f.colorspace, "hsv | rgb | gray");
  cmd->add_option("--bins", f.bins, "Bins per selected channel (one value or one per channel)");
  cmd->add_flag("--reduce-to-linear", f.reduce_to_linear, "Shrink the alphabet to at most N cells");
  cmd->add_option("--superpixels", f.superpixels, "Number of superpixels K");
  cmd->add_option("--compactness", f.compactness, "SLIC compactness");
  cmd->add_option("--regime", f.regimes, "Input regime, e.g. gt:50 bb:25 seeds:15:50 bbpert:10:100");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--exclusion", f.exclusion, "Fraction of worst pixels excluded from accuracy");
  cmd->add_option("--click-cost", f.click_cost, "Clicks charged per superpixel correction");
  cmd->add_option("--workers", f.workers, "Parallel workers");
  cmd->add_flag("--lab-superpixels", f.lab_superpixels, "Cluster superpixels in CIELAB instead of the working space");
}

RunConfig resolve_config(const SharedFlags& f) {
  nlohmann::json j = f.config_path.empty() ? to_json(RunConfig{}) : to_json(load_run_config(f.config_path));
  if (f.colorspace) {
    j["colorspace"] = *f.colorspace;
    j.erase("channels");
    if (f.bins.empty()) j["bins"] = j["bins"].front();
  }
  if (!f.bins.empty()) {
    j["bins"] = f.bins.size() == 1 ? nlohmann::json(f.bins.front()) : nlohmann::json(f.bins);
  }
  if (f.reduce_to_linear) j["reduce_to_linear"] = true;
  if (f.superpixels) j["superpixels"] = *f.superpixels;
  if (f.compactness) j["compactness"] = *f.compactness;
  if (!f.regimes.empty()) j["regimes"] = f.regimes;
  if (f.seed) j["seed"] = *f.seed;
  if (f.exclusion) j["exclusion"] = *f.exclusion;
  if (f.click_cost) j["click_cost"] = *f.click_cost;
  if (f.workers) j["workers"] = *f.workers;
  if (f.lab_superpixels) j["slic_space"] = "lab";
  return run_config_from_json(j);
}

// Scribble map: every nonzero value marks input pixels for that region.
std::vector<PixelSet> scribble_inputs(const RegionAnnotation& scribbles) {
  std::vector<PixelSet> sets;
  for (int i = 1; i <= scribbles.regions(); ++i) {
    sets.emplace_back(i, scribbles.region_pixels(i), InputSource::Manual, scribbles.width(), scribbles.height());
  }
  return sets;
}

int run_segment(const SharedFlags& flags, const std::string& image_path, const std::string& annotation_path,
                const std::string& scribble_path, const std::string& out_path, const std::string& stats_path) {
  const RunConfig config = resolve_config(flags);
  const Image image = load_image(image_path);
  const SegmentConfig seg = segment_config_for(config, image.pixel_count());

  std::vector<PixelSet> sets;
  std::optional<RegionAnnotation> gt;
  std::string regime = "manual";
  if (!annotation_path.empty()) gt = load_label_map(annotation_path, stderr_warnings());
  if (!scribble_path.empty()) {
    sets = scribble_inputs(load_label_map(scribble_path, stderr_warnings()));
  } else {
    require(gt.has_value(), ErrorKind::Configuration, "segment needs --inputs or --annotation");
    require(config.regimes.size() == 1, ErrorKind::Configuration,
            "segment takes exactly one --regime when simulating inputs from --annotation");
    const InputRegime r = parse_regime(config.regimes.front(), config.seed);
    regime = describe(r);
    sets = training_sets(*gt, r, stderr_warnings());
  }

  const auto start = std::chrono::steady_clock::now();
  const SegmentationResult result = segment(image, sets, seg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_label_map(out_path, result.label_field());

  nlohmann::json stats{{"image", image_path},
                       {"output", out_path},
                       {"regime", regime},
                       {"regions", result.regions},
                       {"superpixels", result.partition.count()},
                       {"alphabet", describe(seg.spec)},
                       {"seconds", seconds},
                       {"config", to_json(config)}};
  if (gt) {
    require(gt->width() == image.width() && gt->height() == image.height(), ErrorKind::Input,
            "annotation size does not match the image");
    const auto curve = genie_refinement_curve(result, gt->label_field(), config.click_cost);
    stats["accuracy"] = pixel_accuracy(result.label_field(), gt->label_field(), config.exclusion);
    stats["exclusion"] = config.exclusion;
    stats["ceiling_accuracy"] = curve.back().accuracy;
    stats["boundary_recall"] = boundary_recall(result.partition, gt->label_field().labels);
    stats["clicks_to_99"] = clicks_to_reach(curve, 0.99);
  }
  if (stats_path.empty()) {
    std::cout << stats.dump(2) << '\n';
  } else {
    std::ofstream os(stats_path);
    os << stats.dump(2) << '\n';
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write '" + stats_path + "'");
  }
  return 0;
}

int run_bench(const SharedFlags& flags, const std::string& manifest_path, const std::string& out_dir) {
  const RunConfig config = resolve_config(flags);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const BenchmarkOutcome outcome = run_benchmark(manifest, config, out_dir);
  for (const auto& f : outcome.failures) std::cerr << "skipped: " << f << '\n';
  write_aggregate_csv(std::cout, outcome.report);
  return 0;
}

int run_synth(const std::string& out_dir, int count, int regions, int width, int height, double separation,
              std::uint64_t seed) {
  fs::create_directories(out_dir);
  nlohmann::json manifest{{"name", "synthetic"},
                          {"notes", "M=" + std::to_string(regions) + " v=" + std::to_string(separation)},
                          {"entries", nlohmann::json::array()}};
  for (int k = 0; k < count; ++k) {
    const SyntheticScene scene = generate_synthetic(regions, width, height, seed + static_cast<std::uint64_t>(k),
                                                    separation);
    const std::string stem = "synth_" + std::to_string(k);
    save_png((fs::path(out_dir) / (stem + ".png")).string(), scene.image);
    save_label_map((fs::path(out_dir) / (stem + "_gt.png")).string(), scene.annotation.label_field());
    manifest["entries"].push_back({{"image", stem + ".png"}, {"annotations", {stem + "_gt.png"}}});
  }
  std::ofstream os(fs::path(out_dir) / "manifest.json");
  os << manifest.dump(2) << '\n';
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write manifest in '" + out_dir + "'");
  std::cout << "wrote " << count << " scenes to " << out_dir << '\n';
  return 0;
}

int run_bounds(int hypotheses, double alphabet, double n, std::optional<double> n_min,
               std::optional<double> alpha, double v_min) {
  require(n_min.has_value() != alpha.has_value(), ErrorKind::Configuration, "give exactly one of --n-min, --alpha");
  const double nmin = n_min ? *n_min : *alpha * n;
  const BoundParams p = BoundParams::from_sizes(hypotheses, alphabet, n, nmin, v_min);
  const BoundValue b1 = error_bound_primary(p);
  const BoundValue b2 = error_bound_alternate(p);
  nlohmann::json out{{"M", hypotheses},      {"alphabet", alphabet},
                     {"n", n},               {"n_min", nmin},
                     {"alpha", p.alpha},     {"v_min", v_min},
                     {"bound_primary", {{"value", b1.value}, {"exponent", b1.exponent}, {"vacuous", b1.vacuous}}},
                     {"bound_alternate", {{"value", b2.value}, {"exponent", b2.exponent}, {"vacuous", b2.vacuous}}}};
  if (v_min > 0) out["min_superpixel_size"] = min_superpixel_size(p);
  std::cout << out.dump(2) << '\n';
  return 0;
}

SegmentationService* active_service = nullptr;

int run_serve(const SharedFlags& flags, const std::string& host, int port, int idle_minutes) {
  const RunConfig config = resolve_config(flags);
  ServiceOptions options;
  options.segment = segment_config_for(config, std::numeric_limits<std::size_t>::max());
  options.idle_timeout = std::chrono::minutes(idle_minutes);
  SegmentationService service(options);
  active_service = &service;
  std::signal(SIGINT, [](int) {
    if (active_service) active_service->stop();
  });
  std::cerr << "listening on http://" << host << ':' << port << "/v1\n";
  const bool ok = service.listen(host, port);
  active_service = nullptr;
  if (!ok) {
    std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpixel segmentation by distribution-free hypothesis testing"};
  app.require_subcommand(1);

  SharedFlags seg_flags, bench_flags, serve_flags;

  auto* seg = app.add_subcommand("segment", "Segment one image from inputs; writes a label-map PNG and stats");
  std::string image_path, annotation_path, scribble_path, out_path = "labels.png", stats_path;
  seg->add_option("image", image_path, "Input image (PNG/PPM/PGM)")->required()->check(CLI::ExistingFile);
  seg->add_option("--annotation", annotation_path, "Ground-truth label map (simulates inputs via --regime, scores)")
      ->check(CLI::ExistingFile);
  seg->add_option("--inputs", scribble_path, "Scribble label map: nonzero value k marks inputs for region k")
      ->check(CLI::ExistingFile);
  seg->add_option("-o,--out", out_path, "Output label map PNG");
  seg->add_option("--stats", stats_path, "Write stats JSON here instead of stdout");
  add_shared_flags(seg, seg_flags);

  auto* bench = app.add_subcommand("bench", "Run the benchmark over a dataset manifest");
  std::string manifest_path, bench_out = "bench_out";
  bench->add_option("manifest", manifest_path, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--out", bench_out, "Report directory");
  add_shared_flags(bench, bench_flags);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with exact ground truth");
  std::string synth_out = "synthetic";
  int synth_count = 5, synth_regions = 4, synth_width = 481, synth_height = 321;
  double synth_sep = 0.5;
  std::uint64_t synth_seed = 1;
  synth->add_option("-o,--out", synth_out, "Output directory");
  synth->add_option("--count", synth_count, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--regions", synth_regions, "Regions per image (M)")->check(CLI::Range(2, 255));
  synth->add_option("--width", synth_width, "Image width")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_height, "Image height")->check(CLI::PositiveNumber);
  synth->add_option("--separation", synth_sep, "Pairwise total variation v between regions")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_seed, "Layout seed of the first image");

  auto* bounds = app.add_subcommand("bounds", "Evaluate the error bounds and the minimum superpixel size");
  int b_m = 2;
  double b_alphabet = 2, b_n = 100, b_v = 1;
  std::optional<double> b_nmin, b_alpha;
  bounds->add_option("--regions", b_m, "Number of hypotheses M")->required();
  bounds->add_option("--alphabet", b_alphabet, "Alphabet size |X|")->required();
  bounds->add_option("--n", b_n, "Test sample size n")->required();
  bounds->add_option("--n-min", b_nmin, "Smallest training sample size");
  bounds->add_option("--alpha", b_alpha, "n_min / n");
  bounds->add_option("--v-min", b_v, "Smallest pairwise total variation")->required();

  auto* serve = app.add_subcommand("serve", "Start the local HTTP service (/v1)");
  std::string host = "127.0.0.1";
  int port = 8080, idle = 30;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--idle-minutes", idle, "Evict sessions idle this long")->check(CLI::PositiveNumber);
  add_shared_flags(serve, serve_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seg) return run_segment(seg_flags, image_path, annotation_path, scribble_path, out_path, stats_path);
    if (*bench) return run_bench(bench_flags, manifest_path, bench_out);
    if (*synth) return run_synth(synth_out, synth_count, synth_regions, synth_width, synth_height, synth_sep, synth_seed);
    if (*bounds) return run_bounds(b_m, b_alphabet, b_n, b_nmin, b_alpha, b_v);
    if (*serve) return run_serve(serve_flags, host, port, idle);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

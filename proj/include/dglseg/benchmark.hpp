#pragma once

// Dataset manifests, declarative run configuration and the benchmark driver
// (image x annotation x regime -> segmentation -> accuracy / refinement curve).

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dglseg/color_quantize.hpp"
#include "dglseg/error.hpp"
#include "dglseg/input_sim.hpp"
#include "dglseg/io.hpp"
#include "dglseg/metrics.hpp"
#include "dglseg/pipeline.hpp"

namespace dglseg {

struct ManifestEntry {
  std::string image;                     // resolved path
  std::vector<std::string> annotations;  // resolved paths
};

struct DatasetManifest {
  std::string name;
  std::string notes;
  std::vector<ManifestEntry> entries;
};

/// Parses a manifest; relative paths are resolved against `base_dir`.
inline DatasetManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                      bool check_files = true) {
  DatasetManifest m;
  try {
    m.name = j.value("name", std::string{});
    m.notes = j.value("notes", std::string{});
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() ? path : base_dir / path).lexically_normal().string();
      };
      entry.image = resolve(e.at("image").get<std::string>());
      for (const auto& a : e.at("annotations")) entry.annotations.push_back(resolve(a.get<std::string>()));
      require(!entry.annotations.empty(), ErrorKind::Input,
              "manifest entry '" + entry.image + "' has no annotations");
      if (check_files) {
        require(std::filesystem::exists(entry.image), ErrorKind::Io, "missing image '" + entry.image + "'");
        for (const auto& a : entry.annotations)
          require(std::filesystem::exists(a), ErrorKind::Io, "missing annotation '" + a + "'");
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, "manifest '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_manifest(j, std::filesystem::path(path).parent_path());
}

/// Everything a benchmark run depends on; echoed verbatim into every report.
struct RunConfig {
  std::uint64_t seed = 1;
  QuantizationSpec spec = QuantizationSpec::hsv_hue_saturation(1024);
  bool reduce_to_linear = false;  // shrink the alphabet to at most N cells per image
  SlicParams slic;
  SlicSpace slic_space = SlicSpace::Working;
  double exclusion = 0.0;
  int click_cost = 2;
  int workers = 1;
  bool plot = true;
  std::vector<std::string> regimes{"gt:100", "gt:75", "gt:50",     "gt:25",     "bb:100",
                                   "bb:75",  "bb:50", "bb:25",     "seeds:10:50", "seeds:15:50",
                                   "seeds:20:50", "bbpert:5:100", "bbpert:10:100", "bbpert:15:100"};
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"colorspace", to_string(c.spec.color_space)},
          {"channels", c.spec.channel_selection},
          {"bins", c.spec.bins_per_channel},
          {"reduce_to_linear", c.reduce_to_linear},
          {"superpixels", c.slic.superpixels},
          {"compactness", c.slic.compactness},
          {"slic_iterations", c.slic.iterations},
          {"slic_space", c.slic_space == SlicSpace::Lab ? "lab" : "working"},
          {"exclusion", c.exclusion},
          {"click_cost", c.click_cost},
          {"workers", c.workers},
          {"plot", c.plot},
          {"regimes", c.regimes}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("colorspace")) {
      c.spec.color_space = parse_color_space(j.at("colorspace").get<std::string>());
      if (!j.contains("channels")) {
        c.spec.channel_selection = c.spec.color_space == ColorSpace::Hsv  ? std::vector<int>{0, 1}
                                   : c.spec.color_space == ColorSpace::Rgb ? std::vector<int>{0, 1, 2}
                                                                           : std::vector<int>{0};
      }
    }
    c.spec.channel_selection = j.value("channels", c.spec.channel_selection);
    if (j.contains("bins")) {
      if (j.at("bins").is_number()) {
        c.spec.bins_per_channel.assign(c.spec.channel_selection.size(), j.at("bins").get<int>());
      } else {
        c.spec.bins_per_channel = j.at("bins").get<std::vector<int>>();
      }
    } else if (c.spec.bins_per_channel.size() != c.spec.channel_selection.size()) {
      c.spec.bins_per_channel.assign(c.spec.channel_selection.size(), c.spec.bins_per_channel.front());
    }
    c.reduce_to_linear = j.value("reduce_to_linear", c.reduce_to_linear);
    c.slic.superpixels = j.value("superpixels", c.slic.superpixels);
    c.slic.compactness = j.value("compactness", c.slic.compactness);
    c.slic.iterations = j.value("slic_iterations", c.slic.iterations);
    const std::string space = j.value("slic_space", std::string("working"));
    require(space == "working" || space == "lab", ErrorKind::Configuration,
            "slic_space must be 'working' or 'lab'");
    c.slic_space = space == "lab" ? SlicSpace::Lab : SlicSpace::Working;
    c.exclusion = j.value("exclusion", c.exclusion);
    c.click_cost = j.value("click_cost", c.click_cost);
    c.workers = j.value("workers", c.workers);
    c.plot = j.value("plot", c.plot);
    c.regimes = j.value("regimes", c.regimes);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Configuration, std::string("malformed run config: ") + e.what());
  }
  c.spec.validate();
  require(!c.regimes.empty(), ErrorKind::Configuration, "run config lists no regimes");
  for (const auto& r : c.regimes) parse_regime(r);
  require(c.exclusion >= 0 && c.exclusion < 0.5, ErrorKind::Configuration, "exclusion must lie in [0,0.5)");
  require(c.click_cost >= 0, ErrorKind::Configuration, "click cost must be >= 0");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open run config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Configuration, "run config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

/// Segmentation settings for one image of `pixels` pixels.
inline SegmentConfig segment_config_for(const RunConfig& c, std::size_t pixels) {
  SegmentConfig s;
  s.spec = c.reduce_to_linear ? reduce_alphabet(c.spec, pixels) : c.spec;
  s.slic = c.slic;
  s.slic_space = c.slic_space;
  s.click_cost = c.click_cost;
  return s;
}

/// All runs of one image: the partition is computed once and shared by every
/// annotation and regime.
inline std::vector<RunRecord> benchmark_image(const Image& image, const std::string& image_name,
                                              const std::vector<std::pair<std::string, RegionAnnotation>>& annotations,
                                              const RunConfig& config,
                                              const WarningSink& warnings = {}) {
  const SegmentConfig seg = segment_config_for(config, image.pixel_count());
  const SuperpixelPartition partition = compute_superpixels(image, seg);
  std::vector<RunRecord> records;
  for (const auto& [ann_name, annotation] : annotations) {
    require(annotation.width() == image.width() && annotation.height() == image.height(),
            ErrorKind::Input, "annotation '" + ann_name + "' does not match image size");
    const double recall = boundary_recall(partition, annotation.label_field().labels);
    for (const auto& regime_text : config.regimes) {
      const auto start = std::chrono::steady_clock::now();
      const InputRegime regime = parse_regime(regime_text, config.seed);
      const auto sets = training_sets(annotation, regime, warnings);
      const SegmentationResult result = segment(image, partition, sets, seg);
      const auto curve = genie_refinement_curve(result, annotation.label_field(), config.click_cost);
      RunRecord r;
      r.image = image_name;
      r.annotation = ann_name;
      r.regime = describe(regime);
      r.family = regime_family(regime);
      r.parameter = regime_parameter(regime);
      r.rng_seed = config.seed;
      r.regions = result.regions;
      r.superpixels = result.partition.count();
      r.accuracy = pixel_accuracy(result.label_field(), annotation.label_field(), config.exclusion);
      r.exclusion = config.exclusion;
      r.ceiling_accuracy = curve.back().accuracy;
      r.boundary_recall = recall;
      r.clicks_to_99 = clicks_to_reach(curve, 0.99);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      records.push_back(std::move(r));
    }
  }
  return records;
}

struct BenchmarkOutcome {
  std::vector<RunRecord> runs;
  AccuracyReport report;
  std::vector<std::string> failures;  // "path: reason"
};

/// Runs every manifest entry (in parallel across `config.workers`) and, when
/// `out_dir` is non-empty, writes runs.csv, aggregate.csv, config.json and
/// optionally aggregate.svg there.
inline BenchmarkOutcome run_benchmark(const DatasetManifest& manifest, const RunConfig& config,
                                      const std::filesystem::path& out_dir = {},
                                      const WarningSink& warnings = stderr_warnings()) {
  require(!manifest.entries.empty(), ErrorKind::Input, "manifest has no entries");
  std::vector<std::vector<RunRecord>> per_entry(manifest.entries.size());
  std::vector<std::string> failures(manifest.entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex warn_mutex;
  const WarningSink locked_warnings = [&](std::string_view msg) {
    std::lock_guard lock(warn_mutex);
    warn(warnings, msg);
  };

  auto worker = [&] {
    for (std::size_t k = next++; k < manifest.entries.size(); k = next++) {
      const auto& entry = manifest.entries[k];
      try {
        const Image image = load_image(entry.image);
        std::vector<std::pair<std::string, RegionAnnotation>> annotations;
        for (const auto& a : entry.annotations) {
          annotations.emplace_back(std::filesystem::path(a).filename().string(),
                                   load_label_map(a, locked_warnings));
        }
        per_entry[k] = benchmark_image(image, std::filesystem::path(entry.image).filename().string(),
                                       annotations, config, locked_warnings);
      } catch (const std::exception& e) {
        failures[k] = entry.image + ": " + e.what();
        locked_warnings("skipping " + failures[k]);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::max(1, config.workers); ++w) pool.emplace_back(worker);
  }

  BenchmarkOutcome outcome;
  for (std::size_t k = 0; k < per_entry.size(); ++k) {
    outcome.runs.insert(outcome.runs.end(), per_entry[k].begin(), per_entry[k].end());
    if (!failures[k].empty()) outcome.failures.push_back(failures[k]);
  }
  require(!outcome.runs.empty(), ErrorKind::Input, "every manifest entry failed");
  outcome.report = aggregate(outcome.runs);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream runs(out_dir / "runs.csv");
    write_runs_csv(runs, outcome.runs);
    std::ofstream agg(out_dir / "aggregate.csv");
    write_aggregate_csv(agg, outcome.report);
    nlohmann::json echo = to_json(config);
    echo["dataset"] = manifest.name;
    std::ofstream cfg(out_dir / "config.json");
    cfg << echo.dump(2) << '\n';
    if (config.plot) {
      std::ofstream svg(out_dir / "aggregate.svg");
      write_aggregate_svg(svg, outcome.report);
    }
    require(static_cast<bool>(runs) && static_cast<bool>(agg) && static_cast<bool>(cfg),
            ErrorKind::Io, "failed writing reports to '" + out_dir.string() + "'");
  }
  return outcome;
}

}  // namespace dglseg

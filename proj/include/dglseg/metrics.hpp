#pragma once

// Pixel accuracy (the IoU-style ratio of correctly labelled ground-truth
// pixels), genie-aided refinement curves and per-regime aggregation.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dglseg/error.hpp"
#include "dglseg/image.hpp"
#include "dglseg/pipeline.hpp"

namespace dglseg {

/// Fraction of ground-truth-labelled pixels (gt != 0) whose prediction matches.
///
/// With exclusion e > 0, floor(e * total) pixels are dropped from both numerator
/// and denominator before scoring: regions are visited from the lowest to the
/// highest per-region accuracy, and inside each region wrong pixels go first.
inline double pixel_accuracy(const LabelField& pred, const LabelField& gt, double exclusion = 0.0) {
  require(pred.width == gt.width && pred.height == gt.height && pred.size() == gt.size(),
          ErrorKind::Input, "prediction and ground truth differ in size");
  require(exclusion >= 0.0 && exclusion < 0.5, ErrorKind::Input, "exclusion must lie in [0, 0.5)");

  struct Tally { std::size_t total = 0, correct = 0; };
  std::map<int, Tally> per_region;
  std::size_t total = 0, correct = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt.labels[p] == 0) continue;
    auto& t = per_region[gt.labels[p]];
    ++t.total;
    ++total;
    if (pred.labels[p] == gt.labels[p]) {
      ++t.correct;
      ++correct;
    }
  }
  require(total > 0, ErrorKind::Input, "ground truth has no labelled pixels");

  auto budget = static_cast<std::size_t>(std::floor(exclusion * static_cast<double>(total)));
  if (budget == 0) return static_cast<double>(correct) / static_cast<double>(total);

  std::vector<std::pair<int, Tally>> regions(per_region.begin(), per_region.end());
  std::stable_sort(regions.begin(), regions.end(), [](const auto& a, const auto& b) {
    // a.correct / a.total < b.correct / b.total without division
    return a.second.correct * b.second.total < b.second.correct * a.second.total;
  });
  std::size_t kept_total = total, kept_correct = correct;
  for (const auto& [label, t] : regions) {
    if (budget == 0) break;
    const std::size_t wrong = t.total - t.correct;
    const std::size_t drop_wrong = std::min(budget, wrong);
    budget -= drop_wrong;
    const std::size_t drop_right = std::min(budget, t.correct);
    budget -= drop_right;
    kept_total -= drop_wrong + drop_right;
    kept_correct -= drop_right;
  }
  if (kept_total == 0) return 1.0;
  return static_cast<double>(kept_correct) / static_cast<double>(kept_total);
}

struct CurvePoint {
  int clicks = 0;
  double accuracy = 0.0;
};

namespace detail {

struct SuperpixelVotes {
  std::size_t labelled = 0;       // pixels with gt != 0
  int majority = 0;               // most frequent gt label (smallest on ties), 0 if none
  std::size_t majority_count = 0;
  std::map<int, std::size_t> counts;
};

inline std::vector<SuperpixelVotes> tally_superpixels(const SuperpixelPartition& partition,
                                                      const LabelField& gt) {
  std::vector<SuperpixelVotes> votes(static_cast<std::size_t>(partition.count()));
  for (int k = 0; k < partition.count(); ++k) {
    auto& v = votes[k];
    for (auto p : partition.members(k)) {
      const int g = gt.labels[p];
      if (g == 0) continue;
      ++v.labelled;
      ++v.counts[g];
    }
    for (const auto& [label, n] : v.counts) {
      if (n > v.majority_count) {
        v.majority = label;
        v.majority_count = n;
      }
    }
  }
  return votes;
}

}  // namespace detail

/// Accuracy-versus-clicks curve of a genie that relabels each superpixel whose
/// label matches fewer ground-truth pixels than its majority label does.
/// Corrections are applied in decreasing order of pixel gain (ties by id); each
/// costs `click_cost`. The last point equals the superpixel-majority ceiling.
inline std::vector<CurvePoint> genie_refinement_curve(const SegmentationResult& result,
                                                      const LabelField& gt, int click_cost) {
  require(gt.width == result.width() && gt.height == result.height(), ErrorKind::Input,
          "ground truth does not match the segmentation");
  require(click_cost >= 0, ErrorKind::Input, "click cost must be >= 0");
  const auto votes = detail::tally_superpixels(result.partition, gt);
  std::size_t total = 0, correct = 0;
  struct Gain { std::size_t gain; int k; };
  std::vector<Gain> gains;
  for (int k = 0; k < result.partition.count(); ++k) {
    const auto& v = votes[k];
    total += v.labelled;
    const auto it = v.counts.find(result.superpixel_labels[k]);
    const std::size_t now = it == v.counts.end() ? 0 : it->second;
    correct += now;
    if (v.majority_count > now) gains.push_back({v.majority_count - now, k});
  }
  require(total > 0, ErrorKind::Input, "ground truth has no labelled pixels");
  std::stable_sort(gains.begin(), gains.end(),
                   [](const Gain& a, const Gain& b) { return a.gain > b.gain; });

  std::vector<CurvePoint> curve{{0, static_cast<double>(correct) / static_cast<double>(total)}};
  int clicks = 0;
  for (const Gain& g : gains) {
    correct += g.gain;
    clicks += click_cost;
    curve.push_back({clicks, static_cast<double>(correct) / static_cast<double>(total)});
  }
  return curve;
}

/// Clicks needed to reach `target` accuracy; the final click count if the curve never gets there.
inline int clicks_to_reach(const std::vector<CurvePoint>& curve, double target) {
  require(!curve.empty(), ErrorKind::Input, "empty refinement curve");
  for (const auto& pt : curve) {
    if (pt.accuracy >= target) return pt.clicks;
  }
  return curve.back().clicks;
}

/// One segmentation run of one image/annotation under one regime.
struct RunRecord {
  std::string image;
  std::string annotation;
  std::string regime;         // e.g. "gt:50"
  std::string family;         // gt, bb, seeds, bbpert, manual
  double parameter = 0;       // f, t or p
  std::uint64_t rng_seed = 0;
  int regions = 0;            // M
  int superpixels = 0;        // K'
  double accuracy = 0;
  double exclusion = 0;
  double ceiling_accuracy = 0;   // superpixel-majority oracle
  double boundary_recall = 0;    // superpixel edges vs annotation edges, 2 px tolerance
  int clicks_to_99 = 0;
  double seconds = 0;
};

struct RegimeSummary {
  std::string regime;
  std::string family;
  double parameter = 0;
  std::size_t runs = 0;
  double mean_accuracy = 0;
  double stdev = 0;            // population standard deviation
  double mean_clicks_to_99 = 0;
};

struct AccuracyReport {
  std::vector<RegimeSummary> regimes;  // sorted by (family, parameter)

  const RegimeSummary* find(const std::string& regime) const {
    for (const auto& r : regimes)
      if (r.regime == regime) return &r;
    return nullptr;
  }
};

/// Unweighted per-regime mean/stdev of per-run accuracies.
inline AccuracyReport aggregate(std::span<const RunRecord> runs) {
  require(!runs.empty(), ErrorKind::Input, "nothing to aggregate");
  std::map<std::string, std::vector<const RunRecord*>> by_regime;
  for (const auto& r : runs) by_regime[r.regime].push_back(&r);
  AccuracyReport report;
  for (auto& [name, list] : by_regime) {
    // Sort values so the floating-point sums do not depend on input order.
    std::vector<double> acc, clicks;
    for (const auto* r : list) {
      acc.push_back(r->accuracy);
      clicks.push_back(r->clicks_to_99);
    }
    std::sort(acc.begin(), acc.end());
    std::sort(clicks.begin(), clicks.end());
    const double n = static_cast<double>(acc.size());
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
    double var = 0;
    for (double a : acc) var += (a - mean) * (a - mean);
    RegimeSummary s;
    s.regime = name;
    s.family = list.front()->family;
    s.parameter = list.front()->parameter;
    s.runs = acc.size();
    s.mean_accuracy = mean;
    s.stdev = std::sqrt(var / n);
    s.mean_clicks_to_99 = std::accumulate(clicks.begin(), clicks.end(), 0.0) / n;
    report.regimes.push_back(s);
  }
  std::sort(report.regimes.begin(), report.regimes.end(), [](const auto& a, const auto& b) {
    return a.family != b.family ? a.family < b.family : a.parameter < b.parameter;
  });
  return report;
}

inline void write_runs_csv(std::ostream& os, std::span<const RunRecord> runs) {
  os << "image,annotation,regime,family,parameter,rng_seed,M,K,accuracy,exclusion,"
        "ceiling_accuracy,boundary_recall,clicks_to_99,seconds\n";
  for (const auto& r : runs) {
    os << r.image << ',' << r.annotation << ',' << r.regime << ',' << r.family << ','
       << r.parameter << ',' << r.rng_seed << ',' << r.regions << ',' << r.superpixels << ','
       << r.accuracy << ',' << r.exclusion << ',' << r.ceiling_accuracy << ','
       << r.boundary_recall << ',' << r.clicks_to_99
       << ',' << r.seconds << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& os, const AccuracyReport& report) {
  os << "regime,parameter,mean_accuracy,stdev,mean_clicks_to_99\n";
  for (const auto& s : report.regimes) {
    os << s.regime << ',' << s.parameter << ',' << s.mean_accuracy << ',' << s.stdev << ','
       << s.mean_clicks_to_99 << '\n';
  }
}

/// Bar chart of mean accuracy per regime with +-1 stdev whiskers.
inline void write_aggregate_svg(std::ostream& os, const AccuracyReport& report) {
  const int bar = 28, gap = 10, left = 60, top = 20, plot_h = 300;
  const int width = left + static_cast<int>(report.regimes.size()) * (bar + gap) + 20;
  const int height = top + plot_h + 90;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int t = 0; t <= 10; t += 2) {
    const double y = top + plot_h * (1.0 - t / 10.0);
    os << "<line x1=\"" << left << "\" x2=\"" << width - 10 << "\" y1=\"" << y << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/><text x=\"" << left - 30 << "\" y=\"" << y + 3 << "\">" << t / 10.0
       << "</text>\n";
  }
  int x = left + gap;
  for (const auto& s : report.regimes) {
    const double h = plot_h * std::clamp(s.mean_accuracy, 0.0, 1.0);
    os << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar
       << "\" height=\"" << h << "\" fill=\"#4c78a8\"/>\n";
    const double lo = top + plot_h * (1.0 - std::clamp(s.mean_accuracy - s.stdev, 0.0, 1.0));
    const double hi = top + plot_h * (1.0 - std::clamp(s.mean_accuracy + s.stdev, 0.0, 1.0));
    os << "<line x1=\"" << x + bar / 2 << "\" x2=\"" << x + bar / 2 << "\" y1=\"" << lo
       << "\" y2=\"" << hi << "\" stroke=\"black\"/>\n";
    os << "<text transform=\"translate(" << x + bar / 2 << "," << top + plot_h + 8
       << ") rotate(60)\">" << s.regime << "</text>\n";
    x += bar + gap;
  }
  os << "</svg>\n";
}

}  // namespace dglseg

#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's algorithms; inputs are plain vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Dist = std::vector<double>;

/// max over all subsets A of |p(A) - q(A)| by enumeration (|X| <= 20).
inline double scheffe_tv(const Dist& p, const Dist& q) {
  const std::size_t n = p.size();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double pa = 0, qa = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) {
        pa += p[k];
        qa += q[k];
      }
    }
    best = std::max(best, std::abs(pa - qa));
  }
  return best;
}

inline double half_l1(const Dist& p, const Dist& q) {
  double s = 0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return s / 2;
}

/// Direct evaluation of the minimum-distance decision over Scheffe sets:
/// every pair set is rebuilt from the raw histograms for every hypothesis.
inline int direct_decision(const std::vector<Dist>& hists, const std::vector<std::uint32_t>& sample,
                           std::vector<double>* scores_out = nullptr) {
  const int m_count = static_cast<int>(hists.size());
  std::vector<double> scores(m_count, 0.0);
  for (int m = 0; m < m_count; ++m) {
    for (int i = 0; i < m_count; ++i) {
      for (int j = i + 1; j < m_count; ++j) {
        double nominal = 0;
        for (std::size_t q = 0; q < hists[i].size(); ++q) {
          if (hists[i][q] >= hists[j][q]) nominal += hists[m][q];
        }
        double hits = 0;
        for (auto x : sample) {
          if (hists[i][x] >= hists[j][x]) hits += 1;
        }
        const double mu = hits / static_cast<double>(sample.size());
        scores[m] = std::max(scores[m], std::abs(nominal - mu));
      }
    }
  }
  if (scores_out) *scores_out = scores;
  // Ties up to rounding (1e-12) resolve to the smallest index.
  const double lowest = *std::min_element(scores.begin(), scores.end());
  int m = 0;
  while (scores[m] > lowest + 1e-12) ++m;
  return m + 1;
}

/// Eq.-style bounds evaluated in log space, written independently of the library.
inline double bound_primary(int m, double alphabet, double n, double alpha, double v) {
  const double rate = alpha * v * v / (2.0 * std::pow(2.0 + std::sqrt(alpha), 2));
  const double pen_m = m > 2 ? 2.0 * std::log(m - 1.0) / n : 0.0;
  const double pen_x = alphabet * std::log(2.0) / n;
  return std::exp(std::log(2.0 * m) - n * (rate - std::max(pen_m, pen_x)));
}

inline double bound_alternate(int m, double alphabet, double n, double alpha, double v) {
  const double rate = 2.0 * alpha * v * v / std::pow(3.0 * alphabet + 2.0 * std::sqrt(alpha), 2);
  const double pen_m = m > 2 ? 2.0 * std::log(m - 1.0) / n : 0.0;
  const double pen_x = std::log(alphabet) / n;
  return std::exp(std::log(2.0 * m) - n * (rate - std::max(pen_m, pen_x)));
}

inline double size_threshold(double alphabet, double alpha, double v) {
  return std::ceil(2.0 * std::pow(1.0 + std::sqrt(alpha), 2) * alphabet * std::log(2.0) / (alpha * v * v));
}

/// Smallest integer n >= 1 making the primary bound's exponent positive
/// (M = 2 so only the alphabet penalty applies); scanned, not solved.
inline std::uint64_t smallest_positive_exponent_n(double alphabet, double alpha, double v) {
  const double rate = alpha * v * v / (2.0 * std::pow(2.0 + std::sqrt(alpha), 2));
  for (std::uint64_t n = 1; n < 100000000; ++n) {
    if (static_cast<double>(n) * rate - alphabet * std::log(2.0) > 0) return n;
  }
  return 0;
}

/// Number of 4-connected components among pixels carrying `id`.
inline int components_of(const std::vector<int>& labels, int width, int height, int id) {
  std::vector<char> seen(labels.size(), 0);
  int comps = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (labels[s] != id || seen[s]) continue;
    ++comps;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop();
      const int r = static_cast<int>(p) / width, c = static_cast<int>(p) % width;
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nc < 0 || nr >= height || nc >= width) continue;
        const std::size_t np = static_cast<std::size_t>(nr) * width + nc;
        if (!seen[np] && labels[np] == id) {
          seen[np] = 1;
          q.push(np);
        }
      }
    }
  }
  return comps;
}

/// Accuracy of labelling every superpixel with its GT-majority label
/// (ties: smallest label), over pixels with gt != 0.
inline double majority_ceiling(const std::vector<int>& assignment, const std::vector<int>& gt) {
  std::map<int, std::map<int, long>> votes;
  long total = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p] == 0) continue;
    ++votes[assignment[p]][gt[p]];
    ++total;
  }
  long correct = 0;
  for (const auto& [sp, counts] : votes) {
    long best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    correct += best;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0;
}

inline double plain_accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
  long total = 0, correct = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p] == 0) continue;
    ++total;
    correct += pred[p] == gt[p];
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0;
}

/// Smallest integer n >= 1 making n * (rate - max{2 ln(M-1)/n, |X| ln2/n}) > 0
/// with alpha held fixed; exponential then binary search.
inline std::uint64_t smallest_positive_exponent_n(int m, double alphabet, double alpha, double v) {
  const double rate = alpha * v * v / (2.0 * std::pow(2.0 + std::sqrt(alpha), 2));
  const double penalty = std::max(m > 2 ? 2.0 * std::log(m - 1.0) : 0.0, alphabet * std::log(2.0));
  auto positive = [&](std::uint64_t n) { return static_cast<double>(n) * rate - penalty > 0; };
  std::uint64_t hi = 1;
  while (!positive(hi)) hi *= 2;
  std::uint64_t lo = hi / 2;  // !positive(lo) unless lo == 0
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (positive(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Number of 4-connected components of equal-label pixels, over all labels.
inline std::size_t total_components(const std::vector<int>& labels, int width, int height) {
  std::vector<char> seen(labels.size(), 0);
  std::size_t comps = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (seen[s]) continue;
    ++comps;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(p / width), c = static_cast<int>(p % width);
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nc < 0 || nr >= height || nc >= width) continue;
        const std::size_t np = static_cast<std::size_t>(nr) * width + nc;
        if (!seen[np] && labels[np] == labels[p]) {
          seen[np] = 1;
          stack.push_back(np);
        }
      }
    }
  }
  return comps;
}

/// Superpixels whose GT-majority label beats their current label on labelled pixels.
inline std::size_t improvable_superpixels(const std::vector<int>& assignment, const std::vector<int>& labels,
                                          const std::vector<int>& gt) {
  std::map<int, std::map<int, long>> votes;
  std::map<int, int> current;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    current[assignment[p]] = labels[p];
    if (gt[p] != 0) ++votes[assignment[p]][gt[p]];
  }
  std::size_t n = 0;
  for (const auto& [sp, counts] : votes) {
    long best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    const auto it = counts.find(current[sp]);
    n += best > (it == counts.end() ? 0 : it->second);
  }
  return n;
}

inline Dist random_dist(std::mt19937_64& rng, std::size_t size, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0, 1);
  Dist d(size);
  double s = 0;
  for (auto& x : d) {
    x = u(rng) < zero_prob ? 0.0 : u(rng);
    s += x;
  }
  if (s == 0) {
    d[0] = 1;
    s = 1;
  }
  for (auto& x : d) x /= s;
  return d;
}

}  // namespace oracle

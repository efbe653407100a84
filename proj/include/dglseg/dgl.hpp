#pragma once

// The DGL robust M-ary test over a discrete alphabet: Scheffe sets between
// every pair of nominal histograms, nominal masses of those sets, and the
// min-max decision rule applied to the empirical measure of a test sample.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dglseg/color_quantize.hpp"
#include "dglseg/error.hpp"
#include "dglseg/histograms.hpp"

namespace dglseg {

/// Packed membership mask over the cells of an alphabet.
class CellSet {
 public:
  CellSet() = default;
  CellSet(std::size_t alphabet_size, bool filled)
      : size_(alphabet_size), words_((alphabet_size + 63) / 64, filled ? ~std::uint64_t{0} : 0) {
    trim();
  }

  static CellSet of(std::size_t alphabet_size, std::span<const CellId> members) {
    CellSet s(alphabet_size, false);
    for (CellId c : members) s.insert(c);
    return s;
  }

  std::size_t alphabet_size() const noexcept { return size_; }
  bool contains(CellId c) const noexcept {
    return c < size_ && ((words_[c >> 6] >> (c & 63)) & 1u) != 0;
  }
  void insert(CellId c) {
    require(c < size_, ErrorKind::Input, "cell id outside the alphabet");
    words_[c >> 6] |= std::uint64_t{1} << (c & 63);
  }
  void erase(CellId c) {
    require(c < size_, ErrorKind::Input, "cell id outside the alphabet");
    words_[c >> 6] &= ~(std::uint64_t{1} << (c & 63));
  }
  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  void trim() {
    if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Index of pair (i, j), 0-based with i < j, in the order (0,1), (0,2), ..., (1,2), ...
inline std::size_t pair_index(int i, int j, int hypotheses) {
  return static_cast<std::size_t>(i) * hypotheses - static_cast<std::size_t>(i) * (i + 1) / 2 +
         static_cast<std::size_t>(j - i - 1);
}

inline std::size_t pair_count(int hypotheses) {
  return static_cast<std::size_t>(hypotheses) * (hypotheses - 1) / 2;
}

/// The sets A_ij = { q : Q_i(q) >= Q_j(q) }, i < j.
class ScheffeFamily {
 public:
  ScheffeFamily() = default;

  int hypotheses() const noexcept { return hypotheses_; }
  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  std::size_t size() const noexcept { return sets_.size(); }

  /// i, j are 1-based region labels, i < j.
  const CellSet& set(int i, int j) const {
    require(i >= 1 && j > i && j <= hypotheses_, ErrorKind::Input, "invalid Scheffe pair");
    return sets_[pair_index(i - 1, j - 1, hypotheses_)];
  }
  const CellSet& set_at(std::size_t pair) const { return sets_.at(pair); }
  std::span<const CellSet> sets() const noexcept { return sets_; }

  /// Cells where at least one nominal has mass; outside it every set contains q
  /// and every nominal assigns q zero mass.
  std::span<const CellId> support() const noexcept { return support_; }

 private:
  friend ScheffeFamily build_scheffe_sets(std::span<const Histogram> hists);

  int hypotheses_ = 0;
  std::size_t alphabet_size_ = 0;
  std::vector<CellSet> sets_;
  std::vector<CellId> support_;
};

inline ScheffeFamily build_scheffe_sets(std::span<const Histogram> hists) {
  require(hists.size() >= 2, ErrorKind::Input, "the DGL test needs at least two hypotheses");
  const std::size_t alphabet = hists.front().alphabet_size();
  for (const Histogram& h : hists) {
    require(h.spec() == hists.front().spec() && h.alphabet_size() == alphabet, ErrorKind::Input,
            "all nominal histograms must share one quantization spec");
  }
  ScheffeFamily family;
  family.hypotheses_ = static_cast<int>(hists.size());
  family.alphabet_size_ = alphabet;

  for (std::size_t q = 0; q < alphabet; ++q) {
    for (const Histogram& h : hists) {
      if (h[q] > 0.0) {
        family.support_.push_back(static_cast<CellId>(q));
        break;
      }
    }
  }

  const int m = family.hypotheses_;
  family.sets_.reserve(pair_count(m));
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      // Zero-mass cells satisfy the inequality with equality, so start full.
      CellSet set(alphabet, true);
      for (CellId q : family.support_) {
        if (hists[i][q] < hists[j][q]) set.erase(q);
      }
      family.sets_.push_back(std::move(set));
    }
  }
  return family;
}

/// P_A(m, i, j) = Q_m(A_ij) for every hypothesis m and pair i < j.
class NominalTable {
 public:
  NominalTable() = default;

  int hypotheses() const noexcept { return hypotheses_; }

  /// m, i, j are 1-based, i < j.
  double value(int m, int i, int j) const {
    require(m >= 1 && m <= hypotheses_, ErrorKind::Input, "invalid hypothesis index");
    require(i >= 1 && j > i && j <= hypotheses_, ErrorKind::Input, "invalid Scheffe pair");
    return at(m - 1, pair_index(i - 1, j - 1, hypotheses_));
  }
  /// 0-based hypothesis, pair in pair_index order.
  double at(int m, std::size_t pair) const noexcept {
    return values_[static_cast<std::size_t>(m) * pairs_ + pair];
  }

 private:
  friend NominalTable build_nominal_table(std::span<const Histogram>, const ScheffeFamily&);

  int hypotheses_ = 0;
  std::size_t pairs_ = 0;
  std::vector<double> values_;
};

/// Exact summation of each nominal over each Scheffe set.
inline NominalTable build_nominal_table(std::span<const Histogram> hists,
                                        const ScheffeFamily& family) {
  require(static_cast<int>(hists.size()) == family.hypotheses(), ErrorKind::Input,
          "nominal table needs one histogram per hypothesis of the family");
  for (const Histogram& h : hists) {
    require(h.alphabet_size() == family.alphabet_size(), ErrorKind::Input,
            "histogram alphabet does not match the Scheffe family");
  }
  NominalTable table;
  table.hypotheses_ = family.hypotheses();
  table.pairs_ = family.size();
  table.values_.assign(static_cast<std::size_t>(table.hypotheses_) * table.pairs_, 0.0);
  for (std::size_t p = 0; p < family.size(); ++p) {
    const CellSet& set = family.set_at(p);
    for (int m = 0; m < table.hypotheses_; ++m) {
      double sum = 0.0;
      for (CellId q : family.support()) {
        if (set.contains(q)) sum += hists[m][q];
      }
      table.values_[static_cast<std::size_t>(m) * table.pairs_ + p] = std::min(sum, 1.0);
    }
  }
  return table;
}

/// mu_n(A): fraction of the sample's cells that fall in `set`.
inline double empirical_measure(std::span<const CellId> cells, const CellSet& set) {
  require(!cells.empty(), ErrorKind::Input, "empirical measure of an empty sample");
  std::size_t inside = 0;
  for (CellId c : cells) inside += set.contains(c) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(cells.size());
}

inline constexpr double kScoreTieTolerance = 1e-12;

struct DecisionStats {
  int chosen_label = 0;                // 1-based
  std::vector<double> scores;          // t(m), m = 1..M (index m-1)
  std::vector<double> pair_measures;   // mu_n(A_ij) in pair_index order
};

/// t(m) = max_{i<j} |P_A(m,i,j) - mu_n(A_ij)|; the label is the smallest m minimising t.
inline DecisionStats classify(std::span<const CellId> cells, const ScheffeFamily& family,
                              const NominalTable& table) {
  require(!cells.empty(), ErrorKind::Input, "cannot classify an empty superpixel");
  require(table.hypotheses() == family.hypotheses(), ErrorKind::Input,
          "nominal table and Scheffe family disagree on the hypothesis count");
  const int m_count = family.hypotheses();
  DecisionStats stats;
  stats.pair_measures.resize(family.size());
  stats.scores.assign(static_cast<std::size_t>(m_count), 0.0);
  for (std::size_t p = 0; p < family.size(); ++p) {
    const double mu = empirical_measure(cells, family.set_at(p));
    stats.pair_measures[p] = mu;
    for (int m = 0; m < m_count; ++m) {
      stats.scores[m] = std::max(stats.scores[m], std::abs(table.at(m, p) - mu));
    }
  }
  // Scores equal in exact arithmetic can differ by rounding; treat them as tied.
  const double best = *std::min_element(stats.scores.begin(), stats.scores.end());
  for (int m = 0; m < m_count; ++m) {
    if (stats.scores[m] <= best + kScoreTieTolerance) {
      stats.chosen_label = m + 1;
      break;
    }
  }
  return stats;
}

}  // namespace dglseg

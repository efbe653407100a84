#pragma once

// Non-asymptotic error bounds for the DGL test with empirical nominals, and the
// superpixel-size threshold at which the first bound's exponent turns positive.

#include <cmath>
#include <cstdint>
#include <optional>

#include "dglseg/error.hpp"

namespace dglseg {

struct BoundParams {
  int hypotheses = 2;                 // M
  double alphabet_size = 2;           // |X|
  double n = 1;                       // test-sample (superpixel) size
  double n_min = 1;                   // smallest training-set size
  double alpha = 1;                   // n_min / n
  double v_min = 0;                   // min pairwise total variation
  std::optional<double> delta;        // robustness margin, reporting only

  static BoundParams from_sizes(int hypotheses, double alphabet_size, double n, double n_min,
                                double v_min) {
    BoundParams p;
    p.hypotheses = hypotheses;
    p.alphabet_size = alphabet_size;
    p.n = n;
    p.n_min = n_min;
    p.alpha = n_min / n;
    p.v_min = v_min;
    return p;
  }

  void validate() const {
    require(hypotheses >= 2, ErrorKind::Domain, "bounds need M >= 2");
    require(alphabet_size >= 1, ErrorKind::Domain, "alphabet size must be positive");
    require(n > 0 && n_min > 0, ErrorKind::Domain, "sample sizes must be positive");
    require(alpha > 0, ErrorKind::Domain, "alpha must be positive");
    require(v_min >= 0 && v_min <= 1, ErrorKind::Domain, "v_min must lie in [0,1]");
  }
};

struct BoundValue {
  double value = 0;      // 2M exp(-exponent)
  double exponent = 0;   // n (rate - penalty); may be negative
  bool vacuous = false;  // value >= 1
};

namespace detail {

inline double log_m_minus_one_term(const BoundParams& p) {
  return 2.0 * std::log(static_cast<double>(p.hypotheses - 1)) / p.n;
}

inline BoundValue finish(const BoundParams& p, double rate, double penalty) {
  BoundValue b;
  b.exponent = p.n * (rate - penalty);
  b.value = std::max(0.0, 2.0 * p.hypotheses * std::exp(-b.exponent));
  b.vacuous = b.value >= 1.0;
  return b;
}

}  // namespace detail

/// 2M exp(-n (a v^2 / (2 (2 + sqrt a)^2) - max{2 ln(M-1)/n, |X| ln2 / n})).
inline BoundValue error_bound_primary(const BoundParams& p) {
  p.validate();
  const double sa = std::sqrt(p.alpha);
  const double rate = p.alpha * p.v_min * p.v_min / (2.0 * (2.0 + sa) * (2.0 + sa));
  const double penalty =
      std::max(detail::log_m_minus_one_term(p), p.alphabet_size * std::log(2.0) / p.n);
  return detail::finish(p, rate, penalty);
}

/// 2M exp(-n (2 a v^2 / (3|X| + 2 sqrt a)^2 - max{2 ln(M-1)/n, ln|X| / n})).
inline BoundValue error_bound_alternate(const BoundParams& p) {
  p.validate();
  const double sa = std::sqrt(p.alpha);
  const double denom = 3.0 * p.alphabet_size + 2.0 * sa;
  const double rate = 2.0 * p.alpha * p.v_min * p.v_min / (denom * denom);
  const double penalty =
      std::max(detail::log_m_minus_one_term(p), std::log(p.alphabet_size) / p.n);
  return detail::finish(p, rate, penalty);
}

/// ceil(2 (1 + sqrt a)^2 |X| ln2 / (a v^2)).
inline std::uint64_t min_superpixel_size(const BoundParams& p) {
  p.validate();
  require(p.v_min > 0, ErrorKind::Domain,
          "no superpixel size suffices when the nominals are not separated (v_min = 0)");
  const double sa = std::sqrt(p.alpha);
  const double n = 2.0 * (1.0 + sa) * (1.0 + sa) * p.alphabet_size * std::log(2.0) /
                   (p.alpha * p.v_min * p.v_min);
  return static_cast<std::uint64_t>(std::ceil(n));
}

}  // namespace dglseg

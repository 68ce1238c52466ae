#pragma once

#include <cstdint>

namespace citesim {

using NodeId = std::uint32_t;

// Per focal paper, for one citation window: the three citer-subset counts and
// the ratios derived from them.
//   cd     = (n_i - n_j) / (n_i + n_j + n_k)
//   cd_nok = (n_i - n_j) / (n_i + n_j)
//   r_k    = n_k / (n_i + n_j)
// Records exist only for papers with n_i + n_j >= 1.
struct DisruptionRecord {
  NodeId paper = 0;
  std::int32_t window = 0;
  std::int64_t n_i = 0;
  std::int64_t n_j = 0;
  std::int64_t n_k = 0;
  double cd = 0.0;
  double cd_nok = 0.0;
  double r_k = 0.0;

  // Citations received within the window.
  std::int64_t citations() const { return n_i + n_j; }
};

}  // namespace citesim

#pragma once

#include <array>
#include <cstdint>

#include "testfuncs.hpp"

namespace optlab::features {

inline constexpr int kFeatureCount = 38;
inline constexpr std::array<double, 3> kMomentumDecays = {0.9, 0.99, 0.999};
inline constexpr double kSecondMomentDecay = 0.999;
inline constexpr double kEps = 1e-8;  // inside every reciprocal sqrt
inline constexpr std::array<double, 11> kTimeScales = {
    1, 3, 10, 30, 100, 300, 1000, 3000, 10000, 30000, 100000};

// Per-parameter accumulators. Flat parameter vectors are treated as N x 1
// matrices for the factored accumulators, so the row accumulators are
// length-N and the column accumulators collapse to scalars. All accumulators
// are zero-initialized EMAs (no bias correction); k counts updates.
struct FeatureState {
  std::array<Vec, 3> m;        // momenta at decays {0.9, 0.99, 0.999}
  Vec v;                       // second moment at decay 0.999
  std::array<Vec, 3> fac_row;  // factored row accumulators (EMA of g^2)
  std::array<double, 3> fac_col{};  // factored column accumulators
  std::int64_t k = 0;

  static FeatureState init(int n);
  int size() const { return int(v.size()); }
};

// EMA update with the current gradient; increments k. Non-finite gradients
// are a domain error (callers abort the trajectory instead).
void update_feature_state(FeatureState& s, const Vec& grad);

// N x 38 feature matrix before column normalization. Column layout:
//   0      parameter values
//   1-3    momenta
//   4      second moment
//   5-7    -m * rsqrt(v + eps)
//   8      rsqrt(v + eps)
//   9-11   gradient * rsqrt(vhat_t + eps), vhat = row*col/mean(row)
//   12-14  row accumulators
//   15-17  column accumulators (tiled across rows)
//   18-20  rsqrt(row + eps)
//   21-23  rsqrt(col + eps)
//   24-26  m_t * rsqrt(vhat_t + eps)
//   27-37  tanh(k / {1,3,...,1e5})
Mat compute_features_raw(const FeatureState& s, const Vec& x, const Vec& grad,
                         std::int64_t k);

// Divide each column by its root-mean-square over the N rows; identically
// zero columns stay zero. Idempotent.
void normalize_columns(Mat& z);

// Raw features followed by column normalization.
Mat compute_features(const FeatureState& s, const Vec& x, const Vec& grad,
                     std::int64_t k);

}  // namespace optlab::features

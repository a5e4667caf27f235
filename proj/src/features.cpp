#include "features.hpp"

#include <cmath>

#include "status.hpp"

namespace optlab::features {

FeatureState FeatureState::init(int n) {
  require(n >= 1, Status::ArgumentError, "feature state: n must be >= 1");
  FeatureState s;
  for (auto& mi : s.m) mi = Vec::Zero(n);
  s.v = Vec::Zero(n);
  for (auto& r : s.fac_row) r = Vec::Zero(n);
  s.fac_col = {0.0, 0.0, 0.0};
  s.k = 0;
  return s;
}

void update_feature_state(FeatureState& s, const Vec& grad) {
  require(grad.size() == s.v.size(), Status::ArgumentError,
          "feature state: gradient size mismatch");
  require(grad.allFinite(), Status::DomainError,
          "feature state: non-finite gradient");
  const Vec g2 = grad.array().square();
  const double g2_mean = g2.mean();
  for (int t = 0; t < 3; ++t) {
    const double b = kMomentumDecays[t];
    s.m[t] = b * s.m[t] + (1.0 - b) * grad;
    s.fac_row[t] = b * s.fac_row[t] + (1.0 - b) * g2;
    s.fac_col[t] = b * s.fac_col[t] + (1.0 - b) * g2_mean;
  }
  s.v = kSecondMomentDecay * s.v + (1.0 - kSecondMomentDecay) * g2;
  s.k += 1;
}

Mat compute_features_raw(const FeatureState& s, const Vec& x, const Vec& grad,
                         std::int64_t k) {
  const int n = s.size();
  require(int(x.size()) == n && int(grad.size()) == n, Status::ArgumentError,
          "features: size mismatch");
  require(k >= 0, Status::ArgumentError, "features: negative step");
  Mat z(n, kFeatureCount);

  const Vec rsqrt_v = (s.v.array() + kEps).rsqrt();
  z.col(0) = x;
  for (int t = 0; t < 3; ++t) z.col(1 + t) = s.m[t];
  z.col(4) = s.v;
  for (int t = 0; t < 3; ++t)
    z.col(5 + t) = -s.m[t].array() * rsqrt_v.array();
  z.col(8) = rsqrt_v;

  // Factored second-moment estimate vhat = row * col / mean(row); all-zero
  // accumulators give vhat = 0 (rsqrt then saturates at 1/sqrt(eps)).
  std::array<Vec, 3> vhat;
  for (int t = 0; t < 3; ++t) {
    const double mean_row = s.fac_row[t].mean();
    vhat[t] = mean_row > 0.0
                  ? Vec((s.fac_row[t].array() * s.fac_col[t]) / mean_row)
                  : Vec(Vec::Zero(n));
  }
  for (int t = 0; t < 3; ++t)
    z.col(9 + t) = grad.array() * (vhat[t].array() + kEps).rsqrt();
  for (int t = 0; t < 3; ++t) z.col(12 + t) = s.fac_row[t];
  for (int t = 0; t < 3; ++t) z.col(15 + t).setConstant(s.fac_col[t]);
  for (int t = 0; t < 3; ++t)
    z.col(18 + t) = (s.fac_row[t].array() + kEps).rsqrt();
  for (int t = 0; t < 3; ++t)
    z.col(21 + t).setConstant(1.0 / std::sqrt(s.fac_col[t] + kEps));
  for (int t = 0; t < 3; ++t)
    z.col(24 + t) = s.m[t].array() * (vhat[t].array() + kEps).rsqrt();

  for (int t = 0; t < int(kTimeScales.size()); ++t)
    z.col(27 + t).setConstant(std::tanh(double(k) / kTimeScales[t]));
  return z;
}

void normalize_columns(Mat& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double rms = std::sqrt(z.col(j).squaredNorm() / double(z.rows()));
    if (rms > 0.0) z.col(j) /= rms;
  }
}

Mat compute_features(const FeatureState& s, const Vec& x, const Vec& grad,
                     std::int64_t k) {
  Mat z = compute_features_raw(s, x, grad, k);
  normalize_columns(z);
  return z;
}

}  // namespace optlab::features

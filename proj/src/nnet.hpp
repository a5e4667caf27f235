#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "testfuncs.hpp"

namespace optlab::nnet {

// Linear layer, forward is x * w + b (w stored input x output).
struct Linear {
  Mat w;
  Vec b;
  int in() const { return int(w.rows()); }
  int out() const { return int(w.cols()); }
};

struct LayerNormParams {
  Vec scale;  // init 1
  Vec shift;  // init 0
};

// Plain MLP: ReLU on hidden layers, identity output.
struct MlpParams {
  std::vector<Linear> layers;
};

struct EncoderLayer {
  Linear q, k, v, o;
  LayerNormParams ln1;
  Linear ff1, ff2;
  LayerNormParams ln2;
};

// Embedding + L pre-layer-norm encoder blocks; no positional encoding (the
// stack is permutation-equivariant over the N rows by construction). Each
// block l also carries a rank-one projection head proj[l]: d_model -> 1.
struct EncoderParams {
  Linear embed;
  std::vector<EncoderLayer> layers;
  std::vector<Linear> proj;
  int heads = 0;
};

struct ArchConfig {
  int num_encoders = 3;
  int d_model = 128;
  int heads = 4;
  int ffn_width = 512;
  int feature_count = 38;
};

// Scale hyper-parameters of the update branch: s = lambda_a*exp(lambda_b*alpha)*d.
struct StepConfig {
  double lambda_a = 0.1;
  double lambda_b = 0.1;
};

inline constexpr int kMlpHidden = 128;
inline constexpr int kMlpLayers = 4;  // weight matrices (3 hidden activations)
inline constexpr int kMlpOutputs = 2;

struct OptimizerParams {
  ArchConfig arch;
  StepConfig hyper;
  MlpParams mlp;
  EncoderParams encoders;

  std::int64_t param_count() const;
  Vec flatten() const;
  void add_flat(const Vec& delta, double scale);  // params += scale * delta
  static OptimizerParams from_flat(const ArchConfig& arch,
                                   const StepConfig& hyper, const Vec& theta);

  // Checkpoint round-trip: named-tensor archive with arch/seed meta header.
  void save(const std::string& path, std::uint64_t creation_seed) const;
  static OptimizerParams load(const std::string& path);
};

// Weights ~ truncated normal (std 1/sqrt(fan_in), cut at 2 std), biases 0,
// layer-norm scale 1 / shift 0. Rejects heads that do not divide d_model.
OptimizerParams init_params(std::uint64_t seed, const ArchConfig& arch,
                            const StepConfig& hyper = StepConfig());

// Row-wise softmax (numerically stabilized).
Mat softmax_rows(const Mat& scores);
// Per-row layer norm (epsilon 1e-5).
Mat layer_norm(const LayerNormParams& p, const Mat& x);
// Scaled dot-product multi-head self-attention over the N rows of x.
Mat multi_head_attention(const EncoderLayer& layer, int heads, const Mat& x);

// z: N x feature_count -> N x 2 (column 0 = alpha, column 1 = direction).
Mat mlp_forward(const MlpParams& p, const Mat& z);
// z: N x feature_count -> per-layer rank-one factors u_l (each length N).
std::vector<Vec> encoder_stack_forward(const EncoderParams& p, const Mat& z);

}  // namespace optlab::nnet

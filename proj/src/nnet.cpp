#include "nnet.hpp"

#include <cmath>

#include "status.hpp"
#include "tensor_archive.hpp"

namespace optlab::nnet {

namespace {

constexpr double kLayerNormEps = 1e-5;

void init_linear(Rng& rng, Linear& lin, int in, int out) {
  lin.w.resize(in, out);
  const double std = 1.0 / std::sqrt(double(in));
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) lin.w(i, j) = rng.truncated_normal(std);
  lin.b = Vec::Zero(out);
}

void init_layer_norm(LayerNormParams& ln, int d) {
  ln.scale = Vec::Ones(d);
  ln.shift = Vec::Zero(d);
}

// Visits every tensor in a fixed order shared by flatten/unflatten/save/load.
template <typename Fn>
void visit_tensors(OptimizerParams& p, Fn&& fn) {
  for (size_t i = 0; i < p.mlp.layers.size(); ++i) {
    fn("mlp." + std::to_string(i) + ".w", p.mlp.layers[i].w);
    fn("mlp." + std::to_string(i) + ".b", p.mlp.layers[i].b);
  }
  fn("embed.w", p.encoders.embed.w);
  fn("embed.b", p.encoders.embed.b);
  for (size_t l = 0; l < p.encoders.layers.size(); ++l) {
    auto& layer = p.encoders.layers[l];
    const std::string pre = "enc." + std::to_string(l) + ".";
    fn(pre + "q.w", layer.q.w); fn(pre + "q.b", layer.q.b);
    fn(pre + "k.w", layer.k.w); fn(pre + "k.b", layer.k.b);
    fn(pre + "v.w", layer.v.w); fn(pre + "v.b", layer.v.b);
    fn(pre + "o.w", layer.o.w); fn(pre + "o.b", layer.o.b);
    fn(pre + "ln1.scale", layer.ln1.scale); fn(pre + "ln1.shift", layer.ln1.shift);
    fn(pre + "ff1.w", layer.ff1.w); fn(pre + "ff1.b", layer.ff1.b);
    fn(pre + "ff2.w", layer.ff2.w); fn(pre + "ff2.b", layer.ff2.b);
    fn(pre + "ln2.scale", layer.ln2.scale); fn(pre + "ln2.shift", layer.ln2.shift);
    fn(pre + "proj.w", p.encoders.proj[l].w);
    fn(pre + "proj.b", p.encoders.proj[l].b);
  }
}

struct TensorRef {
  std::string name;
  double* data;
  std::int64_t rows, cols;  // cols == 0 marks a vector
};

std::vector<TensorRef> tensor_refs(OptimizerParams& p) {
  std::vector<TensorRef> refs;
  visit_tensors(p, [&](const std::string& name, auto& t) {
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Mat>) {
      refs.push_back({name, t.data(), t.rows(), t.cols()});
    } else {
      refs.push_back({name, t.data(), t.size(), 0});
    }
  });
  return refs;
}

void zero_linear(Linear& lin, int in, int out) {
  lin.w = Mat::Zero(in, out);
  lin.b = Vec::Zero(out);
}

// Allocates all tensors (zero-filled) without consuming RNG.
OptimizerParams make_skeleton(const ArchConfig& arch, const StepConfig& hyper) {
  require(arch.num_encoders >= 1 && arch.d_model >= 1 && arch.heads >= 1 &&
              arch.ffn_width >= 1 && arch.feature_count >= 1,
          Status::ArgumentError, "arch: all sizes must be positive");
  require(arch.d_model % arch.heads == 0, Status::ArgumentError,
          "arch: heads must divide d_model");
  OptimizerParams p;
  p.arch = arch;
  p.hyper = hyper;
  p.mlp.layers.resize(kMlpLayers);
  int in = arch.feature_count;
  for (int i = 0; i < kMlpLayers; ++i) {
    const int out = (i == kMlpLayers - 1) ? kMlpOutputs : kMlpHidden;
    zero_linear(p.mlp.layers[i], in, out);
    in = kMlpHidden;
  }
  p.encoders.layers.resize(arch.num_encoders);
  p.encoders.proj.resize(arch.num_encoders);
  p.encoders.heads = arch.heads;
  zero_linear(p.encoders.embed, arch.feature_count, arch.d_model);
  for (int l = 0; l < arch.num_encoders; ++l) {
    auto& layer = p.encoders.layers[l];
    zero_linear(layer.q, arch.d_model, arch.d_model);
    zero_linear(layer.k, arch.d_model, arch.d_model);
    zero_linear(layer.v, arch.d_model, arch.d_model);
    zero_linear(layer.o, arch.d_model, arch.d_model);
    init_layer_norm(layer.ln1, arch.d_model);
    zero_linear(layer.ff1, arch.d_model, arch.ffn_width);
    zero_linear(layer.ff2, arch.ffn_width, arch.d_model);
    init_layer_norm(layer.ln2, arch.d_model);
    zero_linear(p.encoders.proj[l], arch.d_model, 1);
  }
  return p;
}

}  // namespace

OptimizerParams init_params(std::uint64_t seed, const ArchConfig& arch,
                            const StepConfig& hyper) {
  OptimizerParams p = make_skeleton(arch, hyper);
  Rng rng(seed);

  int in = arch.feature_count;
  for (int i = 0; i < kMlpLayers; ++i) {
    const int out = (i == kMlpLayers - 1) ? kMlpOutputs : kMlpHidden;
    init_linear(rng, p.mlp.layers[i], in, out);
    in = kMlpHidden;
  }
  init_linear(rng, p.encoders.embed, arch.feature_count, arch.d_model);
  for (int l = 0; l < arch.num_encoders; ++l) {
    auto& layer = p.encoders.layers[l];
    init_linear(rng, layer.q, arch.d_model, arch.d_model);
    init_linear(rng, layer.k, arch.d_model, arch.d_model);
    init_linear(rng, layer.v, arch.d_model, arch.d_model);
    init_linear(rng, layer.o, arch.d_model, arch.d_model);
    init_linear(rng, layer.ff1, arch.d_model, arch.ffn_width);
    init_linear(rng, layer.ff2, arch.ffn_width, arch.d_model);
    init_linear(rng, p.encoders.proj[l], arch.d_model, 1);
  }
  return p;
}

std::int64_t OptimizerParams::param_count() const {
  std::int64_t n = 0;
  auto& self = const_cast<OptimizerParams&>(*this);
  visit_tensors(self, [&](const std::string&, auto& t) { n += t.size(); });
  return n;
}

Vec OptimizerParams::flatten() const {
  Vec theta(param_count());
  std::int64_t at = 0;
  auto& self = const_cast<OptimizerParams&>(*this);
  for (auto& ref : tensor_refs(self)) {
    const std::int64_t n = ref.cols == 0 ? ref.rows : ref.rows * ref.cols;
    std::copy(ref.data, ref.data + n, theta.data() + at);
    at += n;
  }
  return theta;
}

void OptimizerParams::add_flat(const Vec& delta, double scale) {
  require(delta.size() == param_count(), Status::ArgumentError,
          "add_flat: size mismatch");
  std::int64_t at = 0;
  for (auto& ref : tensor_refs(*this)) {
    const std::int64_t n = ref.cols == 0 ? ref.rows : ref.rows * ref.cols;
    for (std::int64_t i = 0; i < n; ++i) ref.data[i] += scale * delta[at + i];
    at += n;
  }
}

OptimizerParams OptimizerParams::from_flat(const ArchConfig& arch,
                                           const StepConfig& hyper,
                                           const Vec& theta) {
  // Build a shape skeleton, then overwrite contents in flatten order.
  OptimizerParams p = make_skeleton(arch, hyper);
  require(theta.size() == p.param_count(), Status::ArgumentError,
          "from_flat: size mismatch");
  std::int64_t at = 0;
  for (auto& ref : tensor_refs(p)) {
    const std::int64_t n = ref.cols == 0 ? ref.rows : ref.rows * ref.cols;
    std::copy(theta.data() + at, theta.data() + at + n, ref.data);
    at += n;
  }
  return p;
}

void OptimizerParams::save(const std::string& path,
                           std::uint64_t creation_seed) const {
  TensorArchive ar;
  ar.meta = {
      {"format", "optlab-checkpoint"},
      {"version", 1},
      {"seed", creation_seed},
      {"param_count", param_count()},
      {"arch_config",
       {{"num_encoders", arch.num_encoders},
        {"d_model", arch.d_model},
        {"heads", arch.heads},
        {"ffn_width", arch.ffn_width},
        {"feature_count", arch.feature_count}}},
      {"hyper", {{"lambda_a", hyper.lambda_a}, {"lambda_b", hyper.lambda_b}}},
  };
  auto& self = const_cast<OptimizerParams&>(*this);
  visit_tensors(self, [&](const std::string& name, auto& t) {
    NamedTensor nt;
    nt.name = name;
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Mat>) {
      nt.shape = {t.rows(), t.cols()};
      nt.data.resize(size_t(t.size()));
      // row-major on disk
      for (std::int64_t i = 0; i < t.rows(); ++i)
        for (std::int64_t j = 0; j < t.cols(); ++j)
          nt.data[size_t(i * t.cols() + j)] = t(i, j);
    } else {
      nt.shape = {t.size()};
      nt.data.assign(t.data(), t.data() + t.size());
    }
    ar.tensors.push_back(std::move(nt));
  });
  ar.write(path);
}

OptimizerParams OptimizerParams::load(const std::string& path) {
  const TensorArchive ar = TensorArchive::read(path);
  require(ar.meta.value("format", "") == "optlab-checkpoint",
          Status::CheckpointError, "not an optimizer checkpoint: " + path);
  ArchConfig arch;
  try {
    const auto& a = ar.meta.at("arch_config");
    arch.num_encoders = a.at("num_encoders").get<int>();
    arch.d_model = a.at("d_model").get<int>();
    arch.heads = a.at("heads").get<int>();
    arch.ffn_width = a.at("ffn_width").get<int>();
    arch.feature_count = a.at("feature_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(Status::CheckpointError,
         std::string("checkpoint: bad arch_config: ") + e.what());
  }
  StepConfig hyper;
  if (ar.meta.contains("hyper")) {
    hyper.lambda_a = ar.meta["hyper"].value("lambda_a", 0.1);
    hyper.lambda_b = ar.meta["hyper"].value("lambda_b", 0.1);
  }
  // Allocate shapes, then fill from the archive.
  OptimizerParams p = make_skeleton(arch, hyper);
  visit_tensors(p, [&](const std::string& name, auto& t) {
    const NamedTensor& nt = ar.find(name);
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Mat>) {
      require(nt.shape.size() == 2 && nt.shape[0] == t.rows() &&
                  nt.shape[1] == t.cols(),
              Status::CheckpointError, "checkpoint: shape mismatch for " + name);
      for (std::int64_t i = 0; i < t.rows(); ++i)
        for (std::int64_t j = 0; j < t.cols(); ++j)
          t(i, j) = nt.data[size_t(i * t.cols() + j)];
    } else {
      require(nt.shape.size() == 1 && nt.shape[0] == t.size(),
              Status::CheckpointError, "checkpoint: shape mismatch for " + name);
      std::copy(nt.data.begin(), nt.data.end(), t.data());
    }
  });
  return p;
}

Mat softmax_rows(const Mat& scores) {
  Mat out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Mat layer_norm(const LayerNormParams& p, const Mat& x) {
  require(p.scale.size() == x.cols() && p.shift.size() == x.cols(),
          Status::ArgumentError, "layer_norm: size mismatch");
  Mat out(x.rows(), x.cols());
  const double inv_d = 1.0 / double(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() * inv_d;
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    out.row(i) = ((x.row(i).array() - mean) * inv_std) * p.scale.transpose().array() +
                 p.shift.transpose().array();
  }
  return out;
}

Mat multi_head_attention(const EncoderLayer& layer, int heads, const Mat& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  require(heads >= 1 && d % heads == 0, Status::ArgumentError,
          "attention: heads must divide d_model");
  const Eigen::Index dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(double(dh));

  const Mat q = (x * layer.q.w).rowwise() + layer.q.b.transpose();
  const Mat k = (x * layer.k.w).rowwise() + layer.k.b.transpose();
  const Mat v = (x * layer.v.w).rowwise() + layer.v.b.transpose();

  Mat concat(n, d);
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = k.middleCols(h * dh, dh);
    const auto vh = v.middleCols(h * dh, dh);
    const Mat attn = softmax_rows((qh * kh.transpose()) * inv_sqrt_dh);
    concat.middleCols(h * dh, dh) = attn * vh;
  }
  return (concat * layer.o.w).rowwise() + layer.o.b.transpose();
}

Mat mlp_forward(const MlpParams& p, const Mat& z) {
  require(!p.layers.empty(), Status::ArgumentError, "mlp: no layers");
  require(z.cols() == p.layers.front().in(), Status::ArgumentError,
          "mlp: input width mismatch");
  Mat h = z;
  for (size_t i = 0; i < p.layers.size(); ++i) {
    h = ((h * p.layers[i].w).rowwise() + p.layers[i].b.transpose());
    if (i + 1 < p.layers.size()) h = h.cwiseMax(0.0);  // ReLU on hidden
  }
  return h;
}

std::vector<Vec> encoder_stack_forward(const EncoderParams& p, const Mat& z) {
  require(z.cols() == p.embed.in(), Status::ArgumentError,
          "encoder: feature width mismatch");
  require(p.layers.size() == p.proj.size(), Status::InternalError,
          "encoder: proj/layer count mismatch");
  Mat e = (z * p.embed.w).rowwise() + p.embed.b.transpose();
  std::vector<Vec> us;
  us.reserve(p.layers.size());
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    // Pre-layer-norm residual blocks.
    e = e + multi_head_attention(layer, p.heads, layer_norm(layer.ln1, e));
    const Mat ff_in = layer_norm(layer.ln2, e);
    const Mat hidden =
        (((ff_in * layer.ff1.w).rowwise() + layer.ff1.b.transpose()))
            .cwiseMax(0.0);
    e = e + ((hidden * layer.ff2.w).rowwise() + layer.ff2.b.transpose());
    us.push_back((e * p.proj[l].w).col(0).array() + p.proj[l].b[0]);
  }
  return us;
}

}  // namespace optlab::nnet

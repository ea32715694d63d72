#include <cmath>

#include "core/hash.hpp"
#include "models/model.hpp"

namespace amc::nn {

namespace {

// Glorot-uniform init, one derived stream per parameter name.
TensorPtr glorot(std::vector<std::size_t> shape, std::size_t fan_in,
                 std::size_t fan_out, std::uint64_t seed, const std::string& name) {
  Rng rng = Rng::stream(seed, {fnv1a64(name.data(), name.size())});
  auto t = make_tensor(Tensor(std::move(shape)));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < t->size(); ++i) {
    t->data()[i] = rng.uniform(-limit, limit);
  }
  return t;
}

struct Builder {
  ModelGraph m;
  std::uint64_t seed;

  int last() const { return static_cast<int>(m.layers.size()) - 1; }

  int conv(const std::string& name, int from, int in_ch, int out_ch, int kh,
           int kw, int ph, int pw) {
    LayerSpec s;
    s.name = name;
    s.kind = LayerKind::kConv;
    s.inputs = {from};
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kh = kh;
    s.kw = kw;
    s.pad_h = ph;
    s.pad_w = pw;
    m.layers.push_back(s);
    m.params[name + ".w"] = glorot(
        {static_cast<std::size_t>(out_ch), static_cast<std::size_t>(in_ch),
         static_cast<std::size_t>(kh), static_cast<std::size_t>(kw)},
        static_cast<std::size_t>(in_ch * kh * kw),
        static_cast<std::size_t>(out_ch * kh * kw), seed, name + ".w");
    m.params[name + ".b"] =
        make_tensor(Tensor({static_cast<std::size_t>(out_ch)}));
    return last();
  }

  int dense(const std::string& name, int from, int in_dim, int out_dim) {
    LayerSpec s;
    s.name = name;
    s.kind = LayerKind::kDense;
    s.inputs = {from};
    s.in_dim = in_dim;
    s.out_dim = out_dim;
    m.layers.push_back(s);
    m.params[name + ".w"] = glorot(
        {static_cast<std::size_t>(in_dim), static_cast<std::size_t>(out_dim)},
        static_cast<std::size_t>(in_dim), static_cast<std::size_t>(out_dim),
        seed, name + ".w");
    m.params[name + ".b"] =
        make_tensor(Tensor({static_cast<std::size_t>(out_dim)}));
    return last();
  }

  int simple(const std::string& name, LayerKind kind, int from, double rate = 0.0) {
    LayerSpec s;
    s.name = name;
    s.kind = kind;
    s.inputs = {from};
    s.rate = rate;
    m.layers.push_back(s);
    return last();
  }

  int add_residual(const std::string& name, int a, int b) {
    LayerSpec s;
    s.name = name;
    s.kind = LayerKind::kAddResidual;
    s.inputs = {a, b};
    m.layers.push_back(s);
    return last();
  }

  int concat(const std::string& name, std::vector<int> from) {
    LayerSpec s;
    s.name = name;
    s.kind = LayerKind::kConcat;
    s.inputs = std::move(from);
    m.layers.push_back(s);
    return last();
  }
};

int scaled_width(double width_scale) {
  if (!(width_scale > 0.0) || width_scale > 1.0) {
    throw ParameterError("width_scale must be in (0, 1]");
  }
  const int w = static_cast<int>(std::lround(256.0 * width_scale));
  return w < 8 ? 8 : w;
}

}  // namespace

ModelGraph build_vtcnn2(std::uint64_t seed) {
  Builder b{{}, seed};
  b.m.arch = "vtcnn2";
  int n = b.conv("conv1", -1, 1, 256, 1, 3, 0, 2);  // [256 x 2 x 130]
  n = b.simple("conv1_relu", LayerKind::kRelu, n);
  n = b.simple("conv1_drop", LayerKind::kDropout, n, 0.5);
  n = b.conv("conv2", n, 256, 80, 2, 3, 0, 2);  // [80 x 1 x 132]
  n = b.simple("conv2_relu", LayerKind::kRelu, n);
  n = b.simple("conv2_drop", LayerKind::kDropout, n, 0.5);
  n = b.simple("flatten", LayerKind::kFlatten, n);  // 10560
  n = b.dense("fc1", n, 10560, 256);
  n = b.simple("fc1_relu", LayerKind::kRelu, n);
  n = b.simple("fc1_drop", LayerKind::kDropout, n, 0.5);
  n = b.dense("fc2", n, 256, 11);
  b.simple("softmax", LayerKind::kSoftmax, n);
  b.m.first_fc = "fc1";
  return std::move(b.m);
}

ModelGraph build_resnet_mini(double width_scale, std::uint64_t seed) {
  const int width = scaled_width(width_scale);
  Builder b{{}, seed};
  b.m.arch = "resnet-mini";
  int n = b.conv("stem", -1, 1, 32, 2, 3, 0, 1);  // [32 x 1 x 128]
  n = b.simple("stem_relu", LayerKind::kRelu, n);
  const int block_in1 = n;
  n = b.conv("b1c1", n, 32, 32, 1, 3, 0, 1);
  n = b.simple("b1c1_relu", LayerKind::kRelu, n);
  n = b.conv("b1c2", n, 32, 32, 1, 3, 0, 1);
  n = b.add_residual("b1_add", n, block_in1);
  n = b.simple("b1_relu", LayerKind::kRelu, n);
  const int block_in2 = n;
  n = b.conv("b2c1", n, 32, 32, 1, 3, 0, 1);
  n = b.simple("b2c1_relu", LayerKind::kRelu, n);
  n = b.conv("b2c2", n, 32, 32, 1, 3, 0, 1);
  n = b.add_residual("b2_add", n, block_in2);
  n = b.simple("b2_relu", LayerKind::kRelu, n);
  n = b.simple("flatten", LayerKind::kFlatten, n);  // 4096
  n = b.dense("fc1", n, 4096, width);
  n = b.simple("fc1_relu", LayerKind::kRelu, n);
  n = b.simple("fc1_drop", LayerKind::kDropout, n, 0.5);
  n = b.dense("fc2", n, width, 11);
  b.simple("softmax", LayerKind::kSoftmax, n);
  b.m.first_fc = "fc1";
  b.m.provenance["width_scale"] = std::to_string(width_scale);
  return std::move(b.m);
}

ModelGraph build_inception_mini(double width_scale, std::uint64_t seed) {
  const int width = scaled_width(width_scale);
  Builder b{{}, seed};
  b.m.arch = "inception-mini";

  auto block = [&](const std::string& prefix, int from, int in_ch) {
    int a = b.conv(prefix + "a", from, in_ch, 16, 1, 1, 0, 0);
    a = b.simple(prefix + "a_relu", LayerKind::kRelu, a);
    int c = b.conv(prefix + "b", from, in_ch, 16, 1, 3, 0, 1);
    c = b.simple(prefix + "b_relu", LayerKind::kRelu, c);
    int e = b.conv(prefix + "c", from, in_ch, 16, 1, 5, 0, 2);
    e = b.simple(prefix + "c_relu", LayerKind::kRelu, e);
    return b.concat(prefix + "_cat", {a, c, e});  // 48 channels
  };

  int n = block("i1", -1, 1);   // [48 x 2 x 128]
  n = block("i2", n, 48);       // [48 x 2 x 128]
  n = b.simple("flatten", LayerKind::kFlatten, n);  // 12288
  n = b.dense("fc1", n, 12288, width);
  n = b.simple("fc1_relu", LayerKind::kRelu, n);
  n = b.simple("fc1_drop", LayerKind::kDropout, n, 0.5);
  n = b.dense("fc2", n, width, 11);
  b.simple("softmax", LayerKind::kSoftmax, n);
  b.m.first_fc = "fc1";
  b.m.provenance["width_scale"] = std::to_string(width_scale);
  return std::move(b.m);
}

ModelGraph build_architecture(const std::string& id, std::uint64_t seed,
                              double width_scale) {
  if (id == "vtcnn2") return build_vtcnn2(seed);
  if (id == "resnet-mini") return build_resnet_mini(width_scale, seed);
  if (id == "inception-mini") return build_inception_mini(width_scale, seed);
  throw ParameterError("unknown architecture '" + id + "'");
}

}  // namespace amc::nn

#include "models/model.hpp"

#include <algorithm>
#include <cstring>

#include "core/hash.hpp"

namespace amc::nn {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDenseSparse: return "dense_sparse";
    case LayerKind::kDensePq: return "dense_pq";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kAddResidual: return "add_residual";
    case LayerKind::kConcat: return "concat_branches";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& s) {
  static const std::map<std::string, LayerKind> lut = {
      {"conv", LayerKind::kConv},
      {"dense", LayerKind::kDense},
      {"dense_sparse", LayerKind::kDenseSparse},
      {"dense_pq", LayerKind::kDensePq},
      {"relu", LayerKind::kRelu},
      {"dropout", LayerKind::kDropout},
      {"flatten", LayerKind::kFlatten},
      {"add_residual", LayerKind::kAddResidual},
      {"concat_branches", LayerKind::kConcat},
      {"softmax", LayerKind::kSoftmax},
  };
  auto it = lut.find(s);
  if (it == lut.end()) throw FormatError("unknown layer kind '" + s + "'");
  return it->second;
}

int ModelGraph::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return static_cast<int>(i);
  }
  throw ParameterError("model has no layer named '" + name + "'");
}

const LayerSpec& ModelGraph::layer(const std::string& name) const {
  return layers[static_cast<std::size_t>(layer_index(name))];
}

TensorPtr ModelGraph::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ParameterError("model has no parameter '" + name + "'");
  return it->second;
}

ModelGraph ModelGraph::clone() const {
  ModelGraph out;
  out.arch = arch;
  out.layers = layers;
  out.sparse = sparse;
  out.codebooks = codebooks;
  out.first_fc = first_fc;
  out.provenance = provenance;
  for (const auto& [name, t] : params) {
    auto copy = make_tensor(*t);
    copy->drop_grad();
    out.params[name] = copy;
  }
  return out;
}

void ModelGraph::set_all_trainable(bool trainable) {
  for (auto& [name, t] : params) {
    (void)name;
    t->set_requires_grad(trainable);
  }
}

namespace {

TensorPtr layer_output(const ModelGraph& m, const LayerSpec& spec, Tape* tape,
                       const std::vector<TensorPtr>& produced, const TensorPtr& x,
                       const ForwardOptions& opts) {
  auto input_of = [&](std::size_t slot) -> const TensorPtr& {
    const int idx = spec.inputs.at(slot);
    if (idx < 0) return x;
    return produced[static_cast<std::size_t>(idx)];
  };

  switch (spec.kind) {
    case LayerKind::kConv:
      return ops::conv2d(tape, input_of(0), m.param(spec.name + ".w"),
                         m.param(spec.name + ".b"), spec.pad_h, spec.pad_w);
    case LayerKind::kDense:
      return ops::dense(tape, input_of(0), m.param(spec.name + ".w"),
                        m.param(spec.name + ".b"));
    case LayerKind::kDenseSparse: {
      const auto& in = input_of(0);
      if (tape != nullptr && in->requires_grad()) {
        throw ContractError("sparse layer '" + spec.name + "' is not trainable");
      }
      auto it = m.sparse.find(spec.name + ".w");
      if (it == m.sparse.end()) {
        throw ContractError("sparse layer '" + spec.name + "' has no CSR weights");
      }
      return make_tensor(it->second.multiply_left(
          *in, m.param(spec.name + ".b")->values()));
    }
    case LayerKind::kDensePq:
      // Weights were reconstructed from the codebook when the layer was
      // installed; the whole layer is frozen.
      return ops::dense(tape, input_of(0), m.param(spec.name + ".w"),
                        m.param(spec.name + ".b"));
    case LayerKind::kRelu:
      return ops::relu(tape, input_of(0));
    case LayerKind::kDropout: {
      if (opts.training && opts.rng == nullptr) {
        throw ContractError("training forward requires an rng for dropout");
      }
      static Rng dummy(0);
      return ops::dropout(tape, input_of(0), spec.rate,
                          opts.rng ? *opts.rng : dummy, opts.training);
    }
    case LayerKind::kFlatten:
      return ops::flatten(tape, input_of(0));
    case LayerKind::kAddResidual:
      return ops::add(tape, input_of(0), input_of(1));
    case LayerKind::kConcat: {
      std::vector<TensorPtr> xs;
      for (std::size_t i = 0; i < spec.inputs.size(); ++i) xs.push_back(input_of(i));
      return ops::concat_channels(tape, xs);
    }
    case LayerKind::kSoftmax:
      return ops::softmax_t(tape, input_of(0), 1.0);
  }
  throw ContractError("unhandled layer kind");
}

}  // namespace

std::vector<TensorPtr> forward_all(const ModelGraph& m, Tape* tape,
                                   const TensorPtr& x, const ForwardOptions& opts) {
  std::vector<TensorPtr> produced;
  produced.reserve(m.layers.size());
  for (const auto& spec : m.layers) {
    produced.push_back(layer_output(m, spec, tape, produced, x, opts));
  }
  return produced;
}

TensorPtr forward_probs(const ModelGraph& m, Tape* tape, const TensorPtr& x,
                        const ForwardOptions& opts) {
  auto outs = forward_all(m, tape, x, opts);
  if (outs.empty()) throw ContractError("empty model");
  return outs.back();
}

TensorPtr forward_logits(const ModelGraph& m, Tape* tape, const TensorPtr& x,
                         const ForwardOptions& opts) {
  if (m.layers.empty() || m.layers.back().kind != LayerKind::kSoftmax) {
    throw ContractError("model does not end with a softmax layer");
  }
  auto outs = forward_all(m, tape, x, opts);
  const int pre = m.layers.back().inputs.at(0);
  if (pre < 0) throw ContractError("softmax cannot read the network input");
  return outs[static_cast<std::size_t>(pre)];
}

TensorPtr make_batch(const rf::Dataset& d, const std::uint32_t* idx, std::size_t n) {
  if (n == 0) throw ParameterError("make_batch: empty batch");
  auto x = make_tensor(Tensor({n, 1, 2, static_cast<std::size_t>(rf::kFrameLen)}));
  const std::size_t frame_elems = 2 * rf::kFrameLen;
  for (std::size_t b = 0; b < n; ++b) {
    const auto& f = d.frame(idx[b]);
    std::memcpy(x->data() + b * frame_elems, f.iq.data(),
                frame_elems * sizeof(double));
  }
  return x;
}

std::pair<std::uint64_t, std::map<std::string, LayerParamCount>> count_params(
    const ModelGraph& m) {
  std::map<std::string, LayerParamCount> per_layer;
  std::uint64_t total = 0;
  auto nnz = [](const std::vector<double>& v) {
    std::uint64_t n = 0;
    for (double x : v) n += x != 0.0 ? 1 : 0;
    return n;
  };
  for (const auto& spec : m.layers) {
    LayerParamCount c;
    switch (spec.kind) {
      case LayerKind::kConv:
        c.weights = static_cast<std::uint64_t>(spec.out_channels) * spec.in_channels *
                    spec.kh * spec.kw;
        c.biases = static_cast<std::uint64_t>(spec.out_channels);
        break;
      case LayerKind::kDense:
        c.weights = static_cast<std::uint64_t>(spec.in_dim) * spec.out_dim;
        c.biases = static_cast<std::uint64_t>(spec.out_dim);
        break;
      case LayerKind::kDenseSparse: {
        const auto& w = m.sparse.at(spec.name + ".w");
        c.weights = w.nnz();
        c.biases = nnz(m.param(spec.name + ".b")->values());
        break;
      }
      case LayerKind::kDensePq: {
        const auto& cb = m.codebooks.at(spec.name + ".w");
        c.codebook_values = cb.centroids.size();
        c.code_entries = cb.codes.size();
        c.biases = static_cast<std::uint64_t>(spec.out_dim);
        break;
      }
      default:
        continue;
    }
    total += c.total();
    per_layer[spec.name] = c;
  }
  return {total, per_layer};
}

double first_fc_fraction(const ModelGraph& m) {
  auto [total, per_layer] = count_params(m);
  if (total == 0) return 0.0;
  auto it = per_layer.find(m.first_fc);
  if (it == per_layer.end()) throw ContractError("first_fc layer has no parameters");
  return static_cast<double>(it->second.total()) / static_cast<double>(total);
}

std::uint64_t paper_scale_params(const std::string& arch_id) {
  // VTCNN2 is exact (full-scale build); the other two are published totals.
  if (arch_id == "vtcnn2") return 2830427;
  if (arch_id == "resnet") return 3450000;
  if (arch_id == "inception") return 10140000;
  throw ParameterError("no paper-scale parameter count for '" + arch_id + "'");
}

ModelGraph to_sparse_layer(const ModelGraph& m, const std::string& layer_name,
                           CsrMatrix w, std::optional<std::vector<double>> bias) {
  w.validate();
  ModelGraph out = m.clone();
  auto& spec = out.layers[static_cast<std::size_t>(out.layer_index(layer_name))];
  if (spec.kind != LayerKind::kDense) {
    throw ParameterError("layer '" + layer_name + "' is not a dense layer");
  }
  if (w.rows != static_cast<std::uint32_t>(spec.in_dim) ||
      w.cols != static_cast<std::uint32_t>(spec.out_dim)) {
    throw DimensionError("sparse weights " + std::to_string(w.rows) + "x" +
                         std::to_string(w.cols) + " do not match layer " +
                         std::to_string(spec.in_dim) + "x" +
                         std::to_string(spec.out_dim));
  }
  spec.kind = LayerKind::kDenseSparse;
  out.params.erase(layer_name + ".w");
  out.sparse[layer_name + ".w"] = std::move(w);
  if (bias) {
    if (bias->size() != static_cast<std::size_t>(spec.out_dim)) {
      throw DimensionError("sparse layer bias length mismatch");
    }
    auto b = make_tensor(Tensor({static_cast<std::size_t>(spec.out_dim)},
                                std::move(*bias)));
    out.params[layer_name + ".b"] = b;
  }
  out.params[layer_name + ".b"]->set_requires_grad(false);
  return out;
}

ModelGraph to_pq_layer(const ModelGraph& m, const std::string& layer_name,
                       PQCodebook cb) {
  cb.validate();
  ModelGraph out = m.clone();
  auto& spec = out.layers[static_cast<std::size_t>(out.layer_index(layer_name))];
  if (spec.kind != LayerKind::kDense) {
    throw ParameterError("layer '" + layer_name + "' is not a dense layer");
  }
  if (cb.rows != static_cast<std::uint32_t>(spec.in_dim) ||
      cb.cols != static_cast<std::uint32_t>(spec.out_dim)) {
    throw DimensionError("pq codebook does not match layer dimensions");
  }
  spec.kind = LayerKind::kDensePq;
  auto w = make_tensor(cb.reconstruct());
  w->set_requires_grad(false);
  out.params[layer_name + ".w"] = w;
  out.params[layer_name + ".b"]->set_requires_grad(false);
  out.codebooks[layer_name + ".w"] = std::move(cb);
  return out;
}

std::uint64_t param_hash(const ModelGraph& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : m.params) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(t->data(), t->size() * sizeof(double), h);
  }
  for (const auto& [name, w] : m.sparse) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(w.values.data(), w.values.size() * sizeof(double), h);
    h = fnv1a64(w.col_idx.data(), w.col_idx.size() * sizeof(std::uint32_t), h);
  }
  for (const auto& [name, cb] : m.codebooks) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(cb.centroids.data(), cb.centroids.size() * sizeof(double), h);
    h = fnv1a64(cb.codes.data(), cb.codes.size() * sizeof(std::uint16_t), h);
  }
  return h;
}

}  // namespace amc::nn

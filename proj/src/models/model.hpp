#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "datagen/datagen.hpp"
#include "models/codebook.hpp"
#include "models/sparse.hpp"
#include "tensor/ops.hpp"

namespace amc::nn {

enum class LayerKind {
  kConv,
  kDense,
  kDenseSparse,
  kDensePq,
  kRelu,
  kDropout,
  kFlatten,
  kAddResidual,
  kConcat,
  kSoftmax,
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& s);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kRelu;
  // Indices of producer nodes; index -1 denotes the network input.
  std::vector<int> inputs;
  // conv
  int out_channels = 0, in_channels = 0, kh = 0, kw = 0, pad_h = 0, pad_w = 0;
  // dense family
  int in_dim = 0, out_dim = 0;
  // dropout
  double rate = 0.0;
};

// Ordered layer DAG plus named parameter tensors. Dense layer weights are
// stored input-major ([in x out]) so the forward pass is x * W + b.
struct ModelGraph {
  std::string arch;
  std::vector<LayerSpec> layers;
  std::map<std::string, TensorPtr> params;      // "<layer>.w" / "<layer>.b"
  std::map<std::string, CsrMatrix> sparse;      // CSR weights of dense_sparse
  std::map<std::string, PQCodebook> codebooks;  // codebooks of dense_pq
  std::string first_fc;
  std::map<std::string, std::string> provenance;

  int layer_index(const std::string& name) const;
  const LayerSpec& layer(const std::string& name) const;
  TensorPtr param(const std::string& name) const;

  // Deep copy (parameter tensors are cloned, not shared).
  ModelGraph clone() const;

  void set_all_trainable(bool trainable);
};

struct ForwardOptions {
  bool training = false;  // enables dropout
  Rng* rng = nullptr;     // required when training
};

// Runs the graph; returns one output per layer (aligned with m.layers).
std::vector<TensorPtr> forward_all(const ModelGraph& m, Tape* tape,
                                   const TensorPtr& x,
                                   const ForwardOptions& opts = {});

// Output of the terminal softmax layer.
TensorPtr forward_probs(const ModelGraph& m, Tape* tape, const TensorPtr& x,
                        const ForwardOptions& opts = {});

// Output of the layer feeding the terminal softmax.
TensorPtr forward_logits(const ModelGraph& m, Tape* tape, const TensorPtr& x,
                         const ForwardOptions& opts = {});

// Stack dataset frames into a [B x 1 x 2 x 128] batch.
TensorPtr make_batch(const rf::Dataset& d, const std::uint32_t* idx, std::size_t n);

// ---- architectures ------------------------------------------------------

// Full-scale VTCNN2: pad -> conv 256x(1x3) -> conv 80x(2x3) -> 10560 -> 256
// -> 11, dropout 0.5 throughout. First FC carries 2,703,616 of ~2.83M params.
ModelGraph build_vtcnn2(std::uint64_t seed);

// Reduced ("mini") variants that keep the defining property of the full
// nets: the first FC layer dominates the parameter count (>= 90% at scale 1).
ModelGraph build_resnet_mini(double width_scale, std::uint64_t seed);
ModelGraph build_inception_mini(double width_scale, std::uint64_t seed);

ModelGraph build_architecture(const std::string& id, std::uint64_t seed,
                              double width_scale = 1.0);

// ---- parameter accounting -----------------------------------------------

struct LayerParamCount {
  std::uint64_t weights = 0;
  std::uint64_t biases = 0;
  std::uint64_t codebook_values = 0;  // centroid doubles of a PQ layer
  std::uint64_t code_entries = 0;     // PQ codes (one per row x subspace)
  std::uint64_t total() const {
    return weights + biases + codebook_values + code_entries;
  }
};

std::pair<std::uint64_t, std::map<std::string, LayerParamCount>> count_params(
    const ModelGraph& m);

// Fraction of all parameters held by the first FC layer.
double first_fc_fraction(const ModelGraph& m);

// Parameter totals of the paper-scale networks, for reduction-ratio
// reporting: VTCNN2 is exact (it is built at full scale); ResNet and
// InceptionNet use their published totals.
std::uint64_t paper_scale_params(const std::string& arch_id);

// ---- layer replacement ---------------------------------------------------

// Replace a dense layer with a CSR-backed one; optionally install a new
// (pruned) bias. Forward output is unchanged up to the zeroed entries.
ModelGraph to_sparse_layer(const ModelGraph& m, const std::string& layer_name,
                           CsrMatrix w,
                           std::optional<std::vector<double>> bias = {});

// Replace a dense layer with a PQ-backed one. The forward pass uses the
// reconstructed weights; codes, centroids and bias become non-trainable.
ModelGraph to_pq_layer(const ModelGraph& m, const std::string& layer_name,
                       PQCodebook cb);

// ---- serialization --------------------------------------------------------

// Directory container: manifest.json + one blob per parameter
// (TNSR / CSRW / PQCB).
void save_model(const ModelGraph& m, const std::filesystem::path& dir);
ModelGraph load_model(const std::filesystem::path& dir);

// Content hash over all parameter payloads (provenance/immutability checks).
std::uint64_t param_hash(const ModelGraph& m);

}  // namespace amc::nn

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "models/model.hpp"
#include "train/trainer.hpp"

namespace amc::nettrim {

// First-FC-layer activations: columns of x are samples (with a trailing
// ones-row when the bias is folded in), y = relu(w_orig^T x) columnwise.
struct ActivationPair {
  Tensor x;       // [rows x N]; rows = d_in (+1 with bias_row)
  Tensor y;       // [d_out x N]
  Tensor w_orig;  // [rows x d_out]; feasible warm start with zero residual
  bool bias_row = false;
};

struct NetTrimConfig {
  // epsilon = epsilon_rel * ||Y||_F unless epsilon_abs overrides it.
  double epsilon_rel = 0.08;
  std::optional<double> epsilon_abs;
  double rho = 1.0;  // ADMM penalty
  int max_iter = 500;
  double tol_primal = 1e-4;
  double tol_dual = 1e-4;
  double zero_threshold = 1e-6;  // relative to max |w|
  int n_samples = 2000;          // activation-matrix column budget
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrimResult {
  nn::CsrMatrix w;           // sparse weight matrix [d_in x d_out]
  std::vector<double> bias;  // trimmed bias (empty when no bias row)
  double epsilon_abs = 0.0;
  double residual = 0.0;  // ||relu(W_hat^T X) - Y||_F of the snapped result
  double l1 = 0.0;        // ||W_hat||_1 after snapping
  int iterations = 0;
};

struct PruneReport {
  std::uint64_t n_total = 0;   // n_T: parameters of the FC layer
  std::uint64_t n_before = 0;  // n_b: nonzeros before pruning
  std::uint64_t n_after = 0;   // n_a: nonzeros after pruning
  double pruning_efficiency = 0.0;  // p_e = 1 - n_a / n_T
  double epsilon_used = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;

  static double efficiency(std::uint64_t n_after, std::uint64_t n_total) {
    return 1.0 - static_cast<double>(n_after) / static_cast<double>(n_total);
  }
};

// Runs the model in eval mode over n_samples random training frames and
// stacks the first-FC input/output activations column-wise. The bias is
// folded in as a ones-row of x and the bias column of w.
ActivationPair collect_activations(const nn::ModelGraph& m, const rf::Dataset& d,
                                   int n_samples, std::uint64_t seed);

// L1 minimization of U subject to ||relu(U^T X) - Y||_F <= epsilon via
// linearized ADMM on the convex split of the ReLU constraint
// (ball on the positive set, half-space on its complement). Warm-started at
// w_orig, which is feasible with zero residual, so the returned iterate
// never has larger L1 norm than the original weights.
TrimResult trim(const ActivationPair& pair, const NetTrimConfig& cfg);

// collect_activations + trim + to_sparse_layer on the model's first FC.
std::pair<nn::ModelGraph, PruneReport> prune_model(const nn::ModelGraph& m,
                                                   const rf::Dataset& d,
                                                   const NetTrimConfig& cfg);

// CSV row matching the pruning-efficiency table: network, n_T, n_b, n_a,
// p_e, plus solver provenance.
std::string prune_report_csv(const std::string& network, const PruneReport& r);

}  // namespace amc::nettrim

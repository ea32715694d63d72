#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "models/model.hpp"

namespace amc::nn {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 128;
  double lr = 1e-3;
  enum class Optimizer { kSgd, kAdam } optimizer = Optimizer::kAdam;
  std::uint64_t seed = 1;
  // Layer names whose parameters must not change (bitwise).
  std::set<std::string> freeze;

  void validate() const;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Batch-loss builder: runs the forward pass(es) on the tape and returns a
// scalar loss. `rng` is the training stream (dropout draws etc).
using LossFn = std::function<TensorPtr(Tape& tape, const TensorPtr& batch_x,
                                       const std::vector<int>& labels, Rng& rng)>;

// Generic mini-batch loop: per-epoch shuffle from the run seed, optimizer
// update in sorted parameter order, frozen layers excluded from both
// gradient computation and updates. Used by both supervised training and
// distillation so that alpha = 0 distillation reproduces training bitwise.
TrainResult train_loop(ModelGraph& m, const rf::Dataset& d,
                       const std::vector<std::uint32_t>& train_indices,
                       const TrainConfig& cfg, const LossFn& loss_fn);

// Supervised training on the dataset's train split: softmax probabilities
// at T = 1 into cross-entropy.
TrainResult train(ModelGraph& m, const rf::Dataset& d, const TrainConfig& cfg);

struct EvalResult {
  double overall_acc = 0.0;
  std::map<int, double> acc_by_snr;
  std::map<int, std::size_t> count_by_snr;
  std::array<std::array<std::uint64_t, 11>, 11> confusion{};  // [true][pred]
  std::size_t total = 0;
  std::size_t correct = 0;
};

enum class Split { kTrain, kTest };

EvalResult evaluate(const ModelGraph& m, const rf::Dataset& d, Split split);

// Stratified fraction of the train split; the test split is left intact.
rf::Dataset subset(const rf::Dataset& d, double fraction, std::uint64_t seed);

// CSV emitters (schemas: "epoch,loss" and "snr_db,accuracy").
std::string loss_history_csv(const TrainResult& r);
std::string eval_csv(const EvalResult& r);

}  // namespace amc::nn

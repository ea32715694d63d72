#include "train/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>

#include "kernels/kernels.hpp"

namespace amc::nn {

namespace {

constexpr std::uint64_t kEpochTag = 11;
constexpr std::uint64_t kTrainTag = 12;
constexpr std::uint64_t kSubsetTag = 13;

// Adam with the reference defaults; state is kept per parameter name and
// updated in sorted-name order for reproducibility.
struct AdamState {
  std::vector<double> m, v;
};

bool layer_is_frozen(const ModelGraph& model, const std::string& layer_name,
                     const TrainConfig& cfg) {
  if (cfg.freeze.count(layer_name)) return true;
  const auto& spec = model.layer(layer_name);
  return spec.kind == LayerKind::kDenseSparse || spec.kind == LayerKind::kDensePq;
}

std::string param_layer(const std::string& param_name) {
  const auto dot = param_name.rfind('.');
  return param_name.substr(0, dot);
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ParameterError("learning rate must be >= 0");
}

TrainResult train_loop(ModelGraph& m, const rf::Dataset& d,
                       const std::vector<std::uint32_t>& train_indices,
                       const TrainConfig& cfg, const LossFn& loss_fn) {
  cfg.validate();
  if (train_indices.empty()) throw ParameterError("training split is empty");

  // Mark trainability once: frozen layers never receive gradients.
  std::vector<TensorPtr> trainable;
  for (auto& [name, t] : m.params) {
    const bool frozen = layer_is_frozen(m, param_layer(name), cfg);
    t->set_requires_grad(!frozen);
    t->drop_grad();
    if (!frozen) trainable.push_back(t);
  }
  std::map<std::string, AdamState> adam;
  if (cfg.optimizer == TrainConfig::Optimizer::kAdam) {
    for (auto& [name, t] : m.params) {
      if (t->requires_grad()) {
        adam[name].m.assign(t->size(), 0.0);
        adam[name].v.assign(t->size(), 0.0);
      }
    }
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::uint64_t step = 0;

  Rng train_rng = Rng::stream(cfg.seed, {kTrainTag});
  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::uint32_t> order = train_indices;
    Rng shuffle_rng = Rng::stream(cfg.seed, {kEpochTag, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - pos,
                                     static_cast<std::size_t>(cfg.batch_size));
      auto x = make_batch(d, order.data() + pos, n);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(d.frame(order[pos + i]).label);
      }

      Tape tape;
      auto loss = loss_fn(tape, x, labels, train_rng);
      const double loss_v = loss->item();
      if (!std::isfinite(loss_v)) {
        throw NumericalError("training loss became non-finite at epoch " +
                             std::to_string(epoch) + " (learning rate too high?)");
      }
      loss_sum += loss_v * static_cast<double>(n);
      seen += n;

      for (auto& t : trainable) t->zero_grad();
      tape.backward(loss);

      ++step;
      if (cfg.optimizer == TrainConfig::Optimizer::kAdam) {
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (auto& [name, state] : adam) {
          auto& t = m.params.at(name);
          kern::backend().adam_step(t->data(), state.m.data(), state.v.data(),
                                    t->grad().data(), t->size(), cfg.lr, kBeta1,
                                    kBeta2, kEps, bc1, bc2);
        }
      } else {
        for (auto& [name, t] : m.params) {
          if (!t->requires_grad()) continue;
          kern::backend().axpy(-cfg.lr, t->grad().data(), t->data(), t->size());
        }
      }
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
  }
  return result;
}

TrainResult train(ModelGraph& m, const rf::Dataset& d, const TrainConfig& cfg) {
  LossFn supervised = [&m](Tape& tape, const TensorPtr& x,
                           const std::vector<int>& labels, Rng& rng) {
    ForwardOptions opts;
    opts.training = true;
    opts.rng = &rng;
    auto logits = forward_logits(m, &tape, x, opts);
    auto probs = ops::softmax_t(&tape, logits, 1.0);
    return ops::cross_entropy(&tape, probs, labels);
  };
  auto result = train_loop(m, d, d.train_idx, cfg, supervised);
  m.provenance["trained"] = "true";
  m.provenance["train_seed"] = std::to_string(cfg.seed);
  m.provenance["train_epochs"] = std::to_string(cfg.epochs);
  m.provenance["train_optimizer"] =
      cfg.optimizer == TrainConfig::Optimizer::kAdam ? "adam" : "sgd";
  return result;
}

EvalResult evaluate(const ModelGraph& m, const rf::Dataset& d, Split split) {
  const auto& idx = split == Split::kTrain ? d.train_idx : d.test_idx;
  if (idx.empty()) throw ParameterError("evaluate: split is empty");

  EvalResult r;
  std::map<int, std::size_t> correct_by_snr;
  constexpr std::size_t kEvalBatch = 256;
  for (std::size_t pos = 0; pos < idx.size(); pos += kEvalBatch) {
    const std::size_t n = std::min(idx.size() - pos, kEvalBatch);
    auto x = make_batch(d, idx.data() + pos, n);
    auto probs = forward_probs(m, nullptr, x);
    const std::size_t ncls = probs->dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = d.frame(idx[pos + i]);
      const std::size_t pred = ops::argmax(probs->data() + i * ncls, ncls);
      r.count_by_snr[f.snr_db] += 1;
      r.confusion[f.label][pred] += 1;
      if (pred == f.label) {
        ++r.correct;
        correct_by_snr[f.snr_db] += 1;
      }
    }
  }
  r.total = idx.size();
  r.overall_acc = static_cast<double>(r.correct) / static_cast<double>(r.total);
  for (const auto& [snr, count] : r.count_by_snr) {
    r.acc_by_snr[snr] =
        static_cast<double>(correct_by_snr[snr]) / static_cast<double>(count);
  }
  return r;
}

rf::Dataset subset(const rf::Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ParameterError("subset fraction must be in (0, 1]");
  }
  // Group the train indices by (class, snr) cell, keep a rounded fraction
  // of each cell; the test split is untouched.
  std::map<std::pair<int, int>, std::vector<std::uint32_t>> cells;
  for (std::uint32_t i : d.train_idx) {
    const auto& f = d.frame(i);
    cells[{f.label, f.snr_db}].push_back(i);
  }
  std::vector<std::uint32_t> kept;
  std::size_t cell_no = 0;
  std::size_t empty_cells = 0;
  for (auto& [key, idx] : cells) {
    (void)key;
    Rng rng = Rng::stream(seed, {kSubsetTag, cell_no++});
    rng.shuffle(idx);
    const std::size_t k = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    if (k == 0) ++empty_cells;
    for (std::size_t i = 0; i < k && i < idx.size(); ++i) kept.push_back(idx[i]);
  }
  if (empty_cells > 0) {
    std::fprintf(stderr,
                 "warning: subset fraction %g leaves %zu (class, snr) cells empty\n",
                 fraction, empty_cells);
  }
  std::sort(kept.begin(), kept.end());
  rf::Dataset out = d;
  out.train_idx = std::move(kept);
  return out;
}

std::string loss_history_csv(const TrainResult& r) {
  std::string csv = "epoch,loss\n";
  for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(r.epoch_loss[i]) + "\n";
  }
  return csv;
}

std::string eval_csv(const EvalResult& r) {
  std::string csv = "snr_db,accuracy\n";
  for (const auto& [snr, acc] : r.acc_by_snr) {
    csv += std::to_string(snr) + "," + format_double(acc) + "\n";
  }
  return csv;
}

}  // namespace amc::nn

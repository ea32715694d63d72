#pragma once

#include <functional>
#include <vector>

#include "tensor/tensor.hpp"

namespace amc {

// Reverse-mode tape. Ops append one node (output tensor + backward step) per
// forward call, so the list is topologically ordered by construction;
// backward() replays it once in reverse. Node-output gradients are zeroed at
// the start of every backward pass, which makes leaf gradients accumulate
// additively across repeated calls — callers zero leaf grads explicitly.
class Tape {
 public:
  using BackwardStep = std::function<void()>;

  void record(TensorPtr output, BackwardStep step) {
    outputs_.push_back(std::move(output));
    steps_.push_back(std::move(step));
  }

  std::size_t size() const { return steps_.size(); }

  void backward(const TensorPtr& loss) {
    if (!loss || loss->size() != 1) {
      throw ContractError("backward requires a scalar loss");
    }
    for (auto& out : outputs_) out->zero_grad();
    loss->grad()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

  void clear() {
    steps_.clear();
    outputs_.clear();
  }

 private:
  std::vector<BackwardStep> steps_;
  std::vector<TensorPtr> outputs_;
};

}  // namespace amc

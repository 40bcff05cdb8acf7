#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lcs/tensor.hpp"

namespace lcs {

// Reverse-mode tape. Operations are appended in execution (topological)
// order during the forward pass; backward() replays them exactly once in
// reverse. An op is only recorded when at least one input carries
// requires_grad, so a frozen encoder costs nothing on the way back.
template <typename S>
class TapeT {
 public:
  using Var = VarT<S>;

  struct OpView {
    const char* name;
    std::vector<const void*> inputs;
    const void* output;
  };

  // Returns true (and records) when grad will flow; the closure must then
  // accumulate into the grad of every input that requires it.
  bool record(const char* name, std::vector<Var> inputs, const Var& output,
              std::function<void()> backward) {
    bool needs = false;
    for (const auto& in : inputs)
      if (in && in->requires_grad) needs = true;
    if (!needs) {
      output->requires_grad = false;
      return false;
    }
    output->requires_grad = true;
    records_.push_back(Record{name, std::move(inputs), output, std::move(backward)});
    return true;
  }

  // Backward from a scalar root.
  void backward(const Var& root) {
    if (root->size() != 1)
      throw DimensionError("backward: root must be scalar, got shape " + shape_str(root->shape));
    std::vector<S> seed{S(1)};
    backward_seeded(root, seed);
  }

  // Backward from any root with an explicit output gradient.
  void backward_seeded(const Var& root, const std::vector<S>& seed) {
    if (seed.size() != root->size())
      throw DimensionError("backward: seed gradient size mismatch");
    root->ensure_grad();
    for (std::size_t i = 0; i < seed.size(); ++i) root->grad[i] += seed[i];
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      it->fn();
      ++visits_;
    }
  }

  std::size_t op_count() const { return records_.size(); }
  std::size_t backward_visits() const { return visits_; }

  std::vector<OpView> ops() const {
    std::vector<OpView> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
      OpView v{r.name, {}, r.output.get()};
      for (const auto& in : r.inputs) v.inputs.push_back(in.get());
      out.push_back(std::move(v));
    }
    return out;
  }

  void clear() {
    records_.clear();
    visits_ = 0;
  }

 private:
  struct Record {
    const char* name;
    std::vector<Var> inputs;  // keeps activations alive until backward
    Var output;
    std::function<void()> fn;
  };
  std::vector<Record> records_;
  std::size_t visits_ = 0;
};

using Tape = TapeT<float>;

}  // namespace lcs

#pragma once

#include <initializer_list>
#include <vector>

#include "guardnet/tensor.hpp"

namespace guardnet::internal {

inline bool tracks(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

inline Tensor make_output(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad) {
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

}  // namespace guardnet::internal

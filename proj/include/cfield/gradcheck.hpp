#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cfield/tensor.hpp"

namespace cfield {

// Compares tape gradients of a scalar-valued function against central finite
// differences. 64-bit only; the comparison is meaningless at f32 noise.
struct GradCheckReport {
  struct PerInput {
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
  };
  std::vector<PerInput> inputs;
  double max_rel_err = 0.0;
  bool saw_nan = false;
  bool pass = false;
  std::string to_string() const;
};

// f must be deterministic and must not capture state that changes between
// calls; it is invoked once on tape and 2*numel times without one.
using TensorFn = std::function<Tensor(Tape*, const std::vector<Tensor>&)>;

GradCheckReport grad_check(const TensorFn& f, std::vector<Tensor> inputs, double step = 1e-5, double tol = 1e-5);

}  // namespace cfield

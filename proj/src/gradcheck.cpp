#include "cfield/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cfield {

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << " max_rel_err=" << max_rel_err;
  if (saw_nan) os << " (NaN in differences)";
  for (size_t i = 0; i < inputs.size(); ++i)
    os << " in" << i << "=" << inputs[i].max_rel_err;
  return os.str();
}

GradCheckReport grad_check(const TensorFn& f, std::vector<Tensor> inputs, double step, double tol) {
  GradCheckReport report;
  report.inputs.resize(inputs.size());

  for (auto& t : inputs) {
    if (t.dtype() != Dtype::F64) fail_internal("grad_check: inputs must be f64");
    t.set_requires_grad(true);
    t.zero_grad();
  }

  Tape tape;
  Tensor loss = f(&tape, inputs);
  if (loss.numel() != 1) fail_internal("grad_check: f must return a scalar, got " + loss.shape_str());
  tape.backward(loss);

  for (size_t which = 0; which < inputs.size(); ++which) {
    Tensor& t = inputs[which];
    auto& entry = report.inputs[which];
    for (int64_t i = 0; i < t.numel(); ++i) {
      const double saved = t.at(i);
      t.buf().set(i, saved + step);
      const double up = f(nullptr, inputs).item();
      t.buf().set(i, saved - step);
      const double down = f(nullptr, inputs).item();
      t.buf().set(i, saved);
      const double fd = (up - down) / (2.0 * step);
      const double an = t.has_grad() ? t.grad_at(i) : 0.0;
      if (!std::isfinite(fd) || !std::isfinite(an)) {
        report.saw_nan = true;
        entry.max_rel_err = std::numeric_limits<double>::infinity();
        continue;
      }
      // floor keeps near-zero gradients from inflating the relative error
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-2});
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
  }
  report.pass = !report.saw_nan && report.max_rel_err < tol;
  return report;
}

}  // namespace cfield

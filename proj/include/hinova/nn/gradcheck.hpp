// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/loss.hpp"
#include "hinova/nn/model.hpp"

namespace hinova::nn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
  std::string worst_param;
  // tensor name -> max relative error observed within that tensor
  std::vector<std::pair<std::string, double>> per_tensor_err;

  double tensor_err(const std::string& prefix) const {
    double worst = 0.0;
    for (const auto& [name, err] : per_tensor_err)
      if (name.rfind(prefix, 0) == 0 && err > worst) worst = err;
    return worst;
  }
};

/// Central-difference check of every analytic parameter gradient against the
/// NLL loss. per_tensor limits how many entries are probed per tensor
/// (0 = all), sampled at evenly spaced indices. The dropout step counter is
/// not advanced, so training-mode forwards reuse one fixed mask and the loss
/// stays a fixed differentiable function of the parameters. Run on a
/// double-precision model; float loses too much to cancellation.
template <class T>
GradCheckReport grad_check(Model<T>& model, const T* x, const int* labels, int b,
                           int per_tensor = 0, double fd_step = 1e-5) {
  const int k = model.spec().n_classes;
  model.zero_grads();
  const T* logp = model.forward(x, b, true);
  (void)nll_loss(logp, labels, b, k);
  std::vector<T> dlogp(std::size_t(b) * k);
  nll_backward(dlogp.data(), labels, b, k);
  model.backward(dlogp.data(), b);

  struct TensorRef {
    std::string name;
    T* data;
    std::vector<T> grad;
  };
  std::vector<TensorRef> tensors;
  model.visit_params([&](const std::string& name, T* p, T* g, std::size_t c) {
    tensors.push_back({name, p, std::vector<T>(g, g + c)});
  });

  auto loss_at = [&](void) -> double {
    const T* lp = model.forward(x, b, true);
    return nll_loss(lp, labels, b, k);
  };

  GradCheckReport rep;
  for (auto& t : tensors) {
    const std::size_t c = t.grad.size();
    std::size_t probes = (per_tensor <= 0) ? c : std::min(c, std::size_t(per_tensor));
    double tensor_worst = 0.0;
    for (std::size_t j = 0; j < probes; ++j) {
      const std::size_t idx = (per_tensor <= 0) ? j : (j * c) / probes;
      const T saved = t.data[idx];
      t.data[idx] = saved + T(fd_step);
      const double lp = loss_at();
      t.data[idx] = saved - T(fd_step);
      const double lm = loss_at();
      t.data[idx] = saved;
      const double numeric = (lp - lm) / (2.0 * fd_step);
      const double analytic = double(t.grad[idx]);
      const double denom = std::max(1e-6, std::abs(numeric) + std::abs(analytic));
      const double rel = std::abs(numeric - analytic) / denom;
      ++rep.n_checked;
      if (rel > tensor_worst) tensor_worst = rel;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = t.name + "[" + std::to_string(idx) + "]";
      }
    }
    rep.per_tensor_err.emplace_back(t.name, tensor_worst);
  }
  return rep;
}

}  // namespace hinova::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/model.hpp"

namespace hinova::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// ADAM with bias correction. Moment buffers follow the model's parameter
/// visitation order; lr = 0 leaves parameters exactly unchanged (the update
/// term is multiplied by lr last).
template <class T>
class Adam {
 public:
  template <class M>
  explicit Adam(M& model) {
    std::size_t n = 0;
    model.visit_params([&](const std::string&, T*, T*, std::size_t c) { n += c; });
    m_.assign(n, T(0));
    v_.assign(n, T(0));
  }

  std::int64_t steps() const { return t_; }

  template <class M>
  void step(M& model, const AdamConfig& cfg) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t_));
    std::size_t off = 0;
    model.visit_params([&](const std::string&, T* p, T* g, std::size_t c) {
      T* m = m_.data() + off;
      T* v = v_.data() + off;
      for (std::size_t i = 0; i < c; ++i) {
        const double gi = double(g[i]);
        const double mi = cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * gi;
        const double vi = cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * gi * gi;
        m[i] = T(mi);
        v[i] = T(vi);
        const double upd = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
        p[i] = T(double(p[i]) - cfg.lr * upd);
      }
      off += c;
    });
    require(off == m_.size(), "Adam: parameter count changed");
  }

 private:
  std::vector<T> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace hinova::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"

namespace icdnet {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are kept per parameter, in the order
/// of the ParameterSet the state was created for.
class Adam {
 public:
  explicit Adam(const ParameterSet& params, AdamConfig cfg = {}) : cfg_(cfg) {
    for (const auto& p : params.all()) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
  }

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return t_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

  /// One update from the gradients currently stored in `params`. Entries
  /// whose gradient has always been zero (the PAD embedding row) stay put.
  void step(ParameterSet& params) {
    auto& ps = params.all();
    if (ps.size() != m_.size()) throw DimensionError("adam: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < ps.size(); ++k) {
      Parameter& p = ps[k];
      if (p.value.shape() != m_[k].shape()) throw DimensionError("adam: shape of " + p.name + " changed");
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t t_ = 0;
};

}  // namespace icdnet

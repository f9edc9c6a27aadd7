#pragma once

#include <cmath>

#include "bodyid/geometry.hpp"

namespace bodyid {

// Adaptive-moment gradient descent state for one parameter block.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  VecX m;
  VecX v;
  long t = 0;

  void init(Eigen::Index n) {
    m = VecX::Zero(n);
    v = VecX::Zero(n);
    t = 0;
  }

  void reset() {
    m.setZero();
    v.setZero();
    t = 0;
  }

  void step(Eigen::Ref<VecX> x, const VecX& grad, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    x -= lr * ((m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  }
};

}  // namespace bodyid

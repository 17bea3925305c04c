#pragma once

#include <Eigen/Core>

namespace latentface {

/// Adam with bias correction; defaults are the usual beta1 = 0.9,
/// beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  explicit Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  int iterations() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

} // namespace latentface

#include "latentface/adam.hpp"

#include <cmath>

#include "latentface/error.hpp"

namespace latentface {

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "Adam: learning rate must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam: betas must lie in [0, 1)");
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double bias1 = 1.0 - std::pow(beta1_, t_);
  const double bias2 = 1.0 - std::pow(beta2_, t_);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

} // namespace latentface

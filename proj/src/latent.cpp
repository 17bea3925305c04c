#include "latentface/latent.hpp"

#include <cmath>
#include <string>

#include "latentface/error.hpp"
#include "latentface/rng.hpp"

namespace latentface {

ExpressionVector ExpressionVector::one_hot(Expression which) {
  ExpressionVector e;
  e.weights_[static_cast<int>(which)] = 1.0;
  return e;
}

ExpressionVector ExpressionVector::from_weights(std::span<const double> weights) {
  require(weights.size() == kExpressionSlots,
          "expression vector needs exactly 7 weights, got " + std::to_string(weights.size()));
  ExpressionVector e;
  for (int i = 0; i < kExpressionSlots; ++i) {
    require(std::isfinite(weights[i]) && weights[i] >= 0.0 && weights[i] <= 1.0,
            "expression weight " + std::to_string(i) + " outside [0,1]");
    e.weights_[i] = weights[i];
  }
  return e;
}

LatentCode sample_latent(std::uint64_t seed, int d, double sigma) {
  require(d > 0, "sample_latent: dimension must be positive");
  require(std::isfinite(sigma) && sigma > 0.0, "sample_latent: sigma must be positive");
  LatentCode z;
  z.seed = seed;
  z.sigma = sigma;
  z.values.resize(d);
  GaussianStream stream(seed);
  for (int i = 0; i < d; ++i) {
    z.values[i] = sigma * stream.next();
  }
  return z;
}

IntermediateCode apply_direction(const IntermediateCode& c, const Direction& dir, double alpha) {
  require(c.tap_layer == dir.tap_layer,
          "apply_direction: direction lives on layer '" + dir.tap_layer + "', code on '" + c.tap_layer + "'");
  require(c.values.size() == dir.delta.size(), "apply_direction: dimension mismatch");
  IntermediateCode out;
  out.tap_layer = c.tap_layer;
  out.values = c.values + alpha * dir.delta;
  return out;
}

} // namespace latentface

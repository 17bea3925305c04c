#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>

namespace latentface {

inline constexpr int kExpressionSlots = 7;

// Slot order of the expression conditioning vector.
enum class Expression : int { neutral = 0, happy, angry, sad, afraid, disgusted, surprised };

struct LatentCode {
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
  double sigma = 1.0;

  int dim() const { return static_cast<int>(values.size()); }
};

/// Seven-slot expression weights. All-zero is the neutral construction; soft
/// blends in [0,1] are accepted.
class ExpressionVector {
 public:
  ExpressionVector() { weights_.setZero(); }

  static ExpressionVector neutral() { return {}; }
  static ExpressionVector one_hot(Expression which);
  static ExpressionVector from_weights(std::span<const double> weights);

  const Eigen::Matrix<double, kExpressionSlots, 1>& weights() const { return weights_; }

 private:
  Eigen::Matrix<double, kExpressionSlots, 1> weights_;
};

struct IntermediateCode {
  Eigen::VectorXd values;
  std::string tap_layer;

  int dim() const { return static_cast<int>(values.size()); }
};

// What produced a direction. Either `prompt` or `image_digest` is set.
struct DirectionProvenance {
  std::string prompt;
  std::string image_digest;
  double lambda_id = 0.0;
  double lambda_l2 = 0.0;
  int steps = 0;
  double learning_rate = 0.0;
  double final_clip = 0.0;
  double final_id = 0.0;
  double final_l2 = 0.0;
  double final_total = 0.0;
};

struct Direction {
  Eigen::VectorXd delta;
  std::string tap_layer;
  DirectionProvenance provenance;

  int dim() const { return static_cast<int>(delta.size()); }
};

/// `d` draws from N(0, sigma^2) off a stream seeded by `seed`.
/// Throws InvalidArgument unless d > 0 and sigma > 0.
LatentCode sample_latent(std::uint64_t seed, int d, double sigma);

/// Returns c + alpha * dir.delta. Throws InvalidArgument on tap-layer or
/// dimension mismatch.
IntermediateCode apply_direction(const IntermediateCode& c, const Direction& dir, double alpha);

} // namespace latentface

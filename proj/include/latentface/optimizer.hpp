#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latentface/embed.hpp"
#include "latentface/generator.hpp"
#include "latentface/losses.hpp"
#include "latentface/mesh.hpp"
#include "latentface/prompts.hpp"
#include "latentface/render.hpp"

namespace latentface {

enum class OptimizerKind { adam };

struct OptimizationConfig {
  int steps = 100;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  std::vector<double> yaws = kDefaultYaws;
  bool record_trace = true;

  void validate() const;
};

enum class ObjectiveMode { text, image };

struct ObjectiveSpec {
  ObjectiveMode mode = ObjectiveMode::text;
  std::vector<std::string> texts;
  std::optional<Image> target_image;
  LossWeights weights;
  PromptTemplateSet templates = default_templates();

  static ObjectiveSpec text(std::vector<std::string> texts, LossWeights weights = {});
  static ObjectiveSpec image(Image target, LossWeights weights = {});

  void validate() const; // exactly one of texts / target_image, matching mode
};

struct LossRecord {
  int step = 0;
  double l_clip = 0.0;
  double l_id = 0.0;
  double l_l2 = 0.0;
  double total = 0.0;
};

struct ManipulationResult {
  Direction direction;
  std::vector<LossRecord> trace; // one record per step, taken before the update
  LossRecord final_losses;       // evaluated at the returned direction
  RenderSet original_renders;
  RenderSet final_renders;
};

/// The composite objective as a function of the edit delta, with the
/// original code, its renders, the identity anchor and the semantic targets
/// all fixed at construction. The referenced generator and embedders must
/// outlive the problem.
class ManipulationProblem {
 public:
  ManipulationProblem(
      const GeneratorBackend& generator,
      IntermediateCode code,
      const ObjectiveSpec& spec,
      std::vector<double> yaws,
      const RenderConfig& render_config,
      const JointEmbedder& embedder,
      const IdentityEmbedder& identity_embedder);

  struct Evaluation {
    LossRecord losses;
    Eigen::VectorXd gradient; // empty unless requested
    RenderSet renders;
  };

  Evaluation evaluate(const Eigen::VectorXd& delta, bool with_gradient) const;

  int dim() const { return code_.dim(); }
  const IntermediateCode& code() const { return code_; }
  const RenderSet& original_renders() const { return original_renders_; }
  const ClipTarget& target() const { return target_; }
  const LossWeights& weights() const { return weights_; }

  TexturedMesh mesh_for(const Eigen::VectorXd& delta) const;

 private:
  const GeneratorBackend& generator_;
  IntermediateCode code_;
  std::vector<double> yaws_;
  RenderConfig render_config_;
  const JointEmbedder& embedder_;
  const IdentityEmbedder& identity_embedder_;
  LossWeights weights_;
  MeshTopology topology_;
  RenderSet original_renders_;
  ClipTarget target_;
  std::optional<IdentityAnchor> anchor_;
};

/// Gradient descent on the edit delta (initialized to zero) for cfg.steps
/// Adam steps. Throws NumericalError naming the step and loss term when any
/// loss or the gradient stops being finite.
ManipulationResult optimize_direction(
    const GeneratorBackend& generator,
    const IntermediateCode& code,
    const ObjectiveSpec& spec,
    const OptimizationConfig& config,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder,
    const RenderConfig& render_config);

// Short human-readable description of the objective for provenance records.
std::string describe_objective(const ObjectiveSpec& spec);
std::string image_digest(const Image& image);

} // namespace latentface

#include "latentface/optimizer.hpp"

#include <cmath>
#include <cstdio>

#include "latentface/adam.hpp"
#include "latentface/error.hpp"
#include "latentface/rng.hpp"

namespace latentface {

void OptimizationConfig::validate() const {
  require(steps >= 1, "steps must be at least 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning rate must be positive");
  require(!yaws.empty(), "at least one view is required");
}

ObjectiveSpec ObjectiveSpec::text(std::vector<std::string> texts, LossWeights weights) {
  ObjectiveSpec spec;
  spec.mode = ObjectiveMode::text;
  spec.texts = std::move(texts);
  spec.weights = weights;
  return spec;
}

ObjectiveSpec ObjectiveSpec::image(Image target, LossWeights weights) {
  ObjectiveSpec spec;
  spec.mode = ObjectiveMode::image;
  spec.target_image = std::move(target);
  spec.weights = weights;
  return spec;
}

void ObjectiveSpec::validate() const {
  weights.validate();
  if (mode == ObjectiveMode::text) {
    require(!texts.empty(), "text objective needs at least one prompt");
    require(!target_image.has_value(), "text objective must not carry a target image");
    templates.validate();
  } else {
    require(target_image.has_value(), "image objective needs a target image");
    require(texts.empty(), "image objective must not carry text prompts");
    require(target_image->channels == 3 && target_image->size() > 0, "target image must be a non-empty RGB image");
  }
}

std::string describe_objective(const ObjectiveSpec& spec) {
  if (spec.mode == ObjectiveMode::image) {
    return {};
  }
  std::string out;
  for (const auto& text : spec.texts) {
    if (!out.empty()) {
      out += " | ";
    }
    for (char ch : text) {
      out += (ch == '\n' || ch == '\r') ? ' ' : ch;
    }
  }
  return out;
}

std::string image_digest(const Image& image) {
  std::uint64_t hash = fnv1a(std::string_view(reinterpret_cast<const char*>(image.pixels.data()),
                                              image.pixels.size() * sizeof(double)));
  hash = mix_seed(hash, static_cast<std::uint64_t>(image.height) << 32 | static_cast<std::uint32_t>(image.width));
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "fnv1a:%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

namespace {

ClipTarget make_target(const ObjectiveSpec& spec, const JointEmbedder& embedder) {
  spec.validate();
  if (spec.mode == ObjectiveMode::text) {
    return ClipTarget::from_prompts(expand_prompt(spec.texts, spec.templates), embedder);
  }
  return ClipTarget::from_image(*spec.target_image, embedder);
}

} // namespace

ManipulationProblem::ManipulationProblem(
    const GeneratorBackend& generator,
    IntermediateCode code,
    const ObjectiveSpec& spec,
    std::vector<double> yaws,
    const RenderConfig& render_config,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder)
    : generator_(generator),
      code_(std::move(code)),
      yaws_(std::move(yaws)),
      render_config_(render_config),
      embedder_(embedder),
      identity_embedder_(identity_embedder),
      weights_(spec.weights),
      topology_(MeshTopology::grid(generator.uv_resolution(), generator.uv_resolution())),
      target_(make_target(spec, embedder)) {
  require(!yaws_.empty(), "at least one view is required");
  require(code_.dim() == generator.layer_width(code_.tap_layer),
          "intermediate code does not match the generator's '" + code_.tap_layer + "' width");
  const TexturedMesh mesh = assemble_mesh(generator_.forward_from_intermediate(code_), topology_);
  original_renders_ = render_views(mesh, yaws_, render_config_);
  anchor_.emplace(original_renders_, identity_embedder_);
}

TexturedMesh ManipulationProblem::mesh_for(const Eigen::VectorXd& delta) const {
  require(delta.size() == code_.values.size(), "delta dimension does not match the intermediate code");
  IntermediateCode edited{code_.values + delta, code_.tap_layer};
  return assemble_mesh(generator_.forward_from_intermediate(edited), topology_);
}

ManipulationProblem::Evaluation ManipulationProblem::evaluate(const Eigen::VectorXd& delta, bool with_gradient) const {
  require(delta.size() == code_.values.size(), "delta dimension does not match the intermediate code");
  const IntermediateCode edited{code_.values + delta, code_.tap_layer};
  const UVMapSet maps = generator_.forward_from_intermediate(edited);
  const TexturedMesh mesh = assemble_mesh(maps, topology_);

  RenderTape tape;
  Evaluation out;
  out.renders = render_views(mesh, yaws_, render_config_, with_gradient ? &tape : nullptr);

  const bool id_grad = with_gradient && weights_.lambda_id > 0.0;
  const ImageLoss clip = target_.evaluate(out.renders, embedder_, with_gradient);
  const ImageLoss id = anchor_->evaluate(out.renders, identity_embedder_, id_grad);
  const double l2 = l2_loss(delta);
  out.losses = {0, clip.value, id.value, l2, total_loss(clip.value, id.value, l2, weights_)};

  if (with_gradient) {
    std::vector<Image> image_grads = clip.grads;
    if (id_grad) {
      for (std::size_t i = 0; i < image_grads.size(); ++i) {
        for (std::size_t p = 0; p < image_grads[i].size(); ++p) {
          image_grads[i].pixels[p] += weights_.lambda_id * id.grads[i].pixels[p];
        }
      }
    }
    const MeshGradient mesh_grad = render_views_vjp(tape, image_grads);
    const UVMapSet map_grad = assemble_mesh_vjp(maps, mesh_grad);
    out.gradient = generator_.forward_from_intermediate_vjp(edited, map_grad);
    if (weights_.lambda_l2 > 0.0) {
      out.gradient += weights_.lambda_l2 * l2_loss_gradient(delta);
    }
  }
  return out;
}

namespace {

void check_finite(const LossRecord& r, int step) {
  const std::pair<const char*, double> terms[] = {
      {"L_CLIP", r.l_clip}, {"L_ID", r.l_id}, {"L_L2", r.l_l2}, {"total", r.total}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw NumericalError("step " + std::to_string(step) + ": " + name + " is not finite");
    }
  }
}

} // namespace

ManipulationResult optimize_direction(
    const GeneratorBackend& generator,
    const IntermediateCode& code,
    const ObjectiveSpec& spec,
    const OptimizationConfig& config,
    const JointEmbedder& embedder,
    const IdentityEmbedder& identity_embedder,
    const RenderConfig& render_config) {
  config.validate();
  spec.validate();
  const ManipulationProblem problem(generator, code, spec, config.yaws, render_config, embedder, identity_embedder);

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(problem.dim());
  Adam adam(problem.dim(), config.learning_rate);
  ManipulationResult result;
  for (int step = 0; step < config.steps; ++step) {
    auto eval = problem.evaluate(delta, true);
    eval.losses.step = step;
    check_finite(eval.losses, step);
    if (!eval.gradient.allFinite()) {
      throw NumericalError("step " + std::to_string(step) + ": gradient is not finite");
    }
    if (config.record_trace) {
      result.trace.push_back(eval.losses);
    }
    adam.step(delta, eval.gradient);
  }

  auto final_eval = problem.evaluate(delta, false);
  final_eval.losses.step = config.steps;
  check_finite(final_eval.losses, config.steps);

  result.final_losses = final_eval.losses;
  result.original_renders = problem.original_renders();
  result.final_renders = std::move(final_eval.renders);
  result.direction.delta = delta;
  result.direction.tap_layer = code.tap_layer;
  auto& prov = result.direction.provenance;
  prov.prompt = describe_objective(spec);
  if (spec.mode == ObjectiveMode::image) {
    prov.image_digest = image_digest(*spec.target_image);
  }
  prov.lambda_id = spec.weights.lambda_id;
  prov.lambda_l2 = spec.weights.lambda_l2;
  prov.steps = config.steps;
  prov.learning_rate = config.learning_rate;
  prov.final_clip = result.final_losses.l_clip;
  prov.final_id = result.final_losses.l_id;
  prov.final_l2 = result.final_losses.l_l2;
  prov.final_total = result.final_losses.total;
  return result;
}

} // namespace latentface

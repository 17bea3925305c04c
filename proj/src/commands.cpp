#include "latentface/commands.hpp"

#include <chrono>
#include <ctime>
#include <memory>

#include <omp.h>

#include "latentface/error.hpp"
#include "latentface/image_io.hpp"
#include "latentface/mesh.hpp"
#include "latentface/optimizer.hpp"
#include "latentface/pca.hpp"
#include "latentface/prompts.hpp"
#include "latentface/records.hpp"

namespace latentface {

namespace fs = std::filesystem;

namespace {

struct Models {
  std::unique_ptr<GeneratorBackend> generator;
  std::unique_ptr<JointEmbedder> joint;
  std::unique_ptr<IdentityEmbedder> identity;
};

std::unique_ptr<JointEmbedder> joint_from(const fs::path& manifest) {
  if (manifest.empty()) {
    const EmbedderManifest m = builtin_joint_manifest();
    return reference_joint_embedder(m.seed, m.dim, m.input_side);
  }
  return load_joint_embedder(manifest);
}

std::unique_ptr<IdentityEmbedder> identity_from(const fs::path& manifest) {
  if (manifest.empty()) {
    const EmbedderManifest m = builtin_identity_manifest();
    return reference_identity_embedder(m.seed, m.dim, m.input_side);
  }
  return load_identity_embedder(manifest);
}

RenderConfig render_config(const RunConfig& config) {
  RenderConfig rc;
  rc.camera.image_size = config.image_size;
  rc.validate();
  return rc;
}

fs::path absolute_or_empty(const fs::path& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal();
}

// Copy of `config` with absolute paths, so the manifest can be replayed from anywhere.
RunConfig resolved(const RunConfig& config) {
  RunConfig r = config;
  r.backend = absolute_or_empty(r.backend);
  r.embedder = absolute_or_empty(r.embedder);
  r.id_embedder = absolute_or_empty(r.id_embedder);
  r.target_image = absolute_or_empty(r.target_image);
  r.templates = absolute_or_empty(r.templates);
  r.direction = absolute_or_empty(r.direction);
  r.out = absolute_or_empty(r.out);
  for (auto& p : r.original_renders) p = absolute_or_empty(p);
  for (auto& p : r.manipulated_renders) p = absolute_or_empty(p);
  return r;
}

std::string utc_stamp(std::chrono::system_clock::time_point now, const char* format) {
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::strftime(buf, sizeof(buf), format, &tm);
  return buf;
}

fs::path create_run_dir(const fs::path& out, std::uint64_t seed, std::chrono::system_clock::time_point now) {
  const std::string base = "run-" + utc_stamp(now, "%Y%m%d-%H%M%S") + "-seed" + std::to_string(seed);
  fs::path dir = out / base;
  for (int n = 2; fs::exists(dir); ++n) {
    dir = out / (base + "-" + std::to_string(n));
  }
  fs::create_directories(dir);
  return dir;
}

std::string join_values(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += (i ? " " : "") + format_double(v[i]);
  }
  return out;
}

/// Exports the mesh for `code` as `<dir>/mesh.obj` and writes one PNG per view.
RenderSet write_mesh_and_views(
    const GeneratorBackend& generator,
    const IntermediateCode& code,
    const std::vector<double>& yaws,
    const RenderConfig& rc,
    const fs::path& dir) {
  const int res = generator.uv_resolution();
  const TexturedMesh mesh = assemble_mesh(generator.forward_from_intermediate(code), MeshTopology::grid(res, res));
  fs::create_directories(dir);
  export_mesh(mesh, dir / "mesh.obj");
  RenderSet renders = render_views(mesh, yaws, rc);
  for (std::size_t i = 0; i < renders.size(); ++i) {
    write_png(dir / ("view" + std::to_string(i) + ".png"), renders.images[i]);
  }
  return renders;
}

void write_manifest(
    const RunConfig& config,
    Command command,
    const fs::path& run_dir,
    std::chrono::system_clock::time_point started,
    KeyValueDocument extra = {}) {
  KeyValueDocument doc = resolved(config).to_document();
  const double wall = std::chrono::duration<double>(std::chrono::system_clock::now() - started).count();
  doc.set("run.command", std::string(command_name(command)));
  doc.set("run.started", utc_stamp(started, "%Y-%m-%dT%H:%M:%SZ"));
  doc.set("run.wall_seconds", wall);
  doc.set("run.tool_version", std::string(LATENTFACE_VERSION));
  for (const auto& [key, value] : extra.entries()) {
    doc.set("run." + key, value);
  }
  doc.save(run_dir / "run.manifest");
}

IntermediateCode base_code(const GeneratorBackend& generator, const RunConfig& config, const std::string& tap) {
  const LatentCode z = sample_latent(config.seed, generator.latent_dim(), 1.0);
  return generator.partial_forward(z, parse_expression(config.expression), tap);
}

std::string resolve_tap(const GeneratorBackend& generator, const std::string& layer) {
  const std::string tap = layer.empty() ? generator.default_tap() : layer;
  generator.layer_width(tap);
  return tap;
}

PromptTemplateSet templates_for(const RunConfig& config) {
  return config.templates.empty() ? default_templates() : load_templates(config.templates);
}

fs::path manipulate(RunConfig config) {
  const auto started = std::chrono::system_clock::now();
  Models m{load_generator(config.backend), joint_from(config.embedder), identity_from(config.id_embedder)};
  config.layer = resolve_tap(*m.generator, config.layer);
  const RenderConfig rc = render_config(config);

  ObjectiveSpec spec = config.prompts.empty() ? ObjectiveSpec::image(read_png(config.target_image), config.weights)
                                              : ObjectiveSpec::text(config.prompts, config.weights);
  spec.templates = templates_for(config);
  spec.validate();

  OptimizationConfig oc;
  oc.steps = config.steps;
  oc.learning_rate = config.learning_rate;
  oc.seed = config.seed;
  oc.yaws = config.views;
  oc.validate();

  const IntermediateCode code = base_code(*m.generator, config, config.layer);
  const ManipulationResult result = optimize_direction(*m.generator, code, spec, oc, *m.joint, *m.identity, rc);

  const fs::path run_dir = create_run_dir(config.out, config.seed, started);
  write_mesh_and_views(*m.generator, code, config.views, rc, run_dir / "original");
  write_mesh_and_views(*m.generator, apply_direction(code, result.direction, 1.0), config.views, rc,
                       run_dir / "manipulated");
  DirectionRecord{result.direction}.save(run_dir / "direction.txt");
  write_trace(result.trace, run_dir / "trace.jsonl");

  const ClipTarget target = spec.mode == ObjectiveMode::text
                                ? ClipTarget::from_prompts(expand_prompt(spec.texts, spec.templates), *m.joint)
                                : ClipTarget::from_image(*spec.target_image, *m.joint);
  evaluate_renders(result.original_renders, result.final_renders, target, *m.joint, *m.identity)
      .save(run_dir / "eval.txt");

  KeyValueDocument extra;
  extra.set("final_l_clip", result.final_losses.l_clip);
  extra.set("final_l_id", result.final_losses.l_id);
  extra.set("final_l_l2", result.final_losses.l_l2);
  extra.set("final_total", result.final_losses.total);
  write_manifest(config, Command::manipulate, run_dir, started, extra);
  return run_dir;
}

fs::path apply(RunConfig config) {
  const auto started = std::chrono::system_clock::now();
  const auto generator = load_generator(config.backend);
  const DirectionRecord record = DirectionRecord::load(config.direction);
  const Direction& dir = record.direction;
  require(config.layer.empty() || config.layer == dir.tap_layer,
          "apply: --layer " + config.layer + " does not match the direction's tap layer " + dir.tap_layer);
  config.layer = dir.tap_layer;
  require(generator->layer_width(dir.tap_layer) == dir.dim(),
          "apply: direction has " + std::to_string(dir.dim()) + " values but layer " + dir.tap_layer + " is " +
              std::to_string(generator->layer_width(dir.tap_layer)) + " wide");
  config.alphas = config.resolved_alphas(Command::apply);
  const RenderConfig rc = render_config(config);
  const IntermediateCode code = base_code(*generator, config, dir.tap_layer);

  const fs::path run_dir = create_run_dir(config.out, config.seed, started);
  KeyValueDocument codes;
  codes.set("tap_layer", dir.tap_layer);
  codes.set("base", join_values(code.values));
  for (std::size_t i = 0; i < config.alphas.size(); ++i) {
    const double alpha = config.alphas[i];
    const IntermediateCode edited = apply_direction(code, dir, alpha);
    write_mesh_and_views(*generator, edited, config.views, rc, run_dir / ("alpha_" + format_double(alpha)));
    codes.set("alpha." + std::to_string(i), alpha);
    codes.set("code." + std::to_string(i), join_values(edited.values));
  }
  codes.save(run_dir / "codes.txt");
  write_manifest(config, Command::apply, run_dir, started);
  return run_dir;
}

fs::path pca(RunConfig config) {
  const auto started = std::chrono::system_clock::now();
  const auto generator = load_generator(config.backend);
  config.layer = resolve_tap(*generator, config.layer);
  const int width = generator->layer_width(config.layer);
  require(config.components <= width, "pca: --components exceeds the tap layer width " + std::to_string(width));
  config.alphas = config.resolved_alphas(Command::pca);
  const double alpha = config.alphas.front();
  const RenderConfig rc = render_config(config);

  const LatentSampleMatrix samples = collect_samples(*generator, config.samples, config.layer, config.seed);
  const PrincipalComponentSet pcs = fit_pca(samples, config.components);
  const IntermediateCode code = base_code(*generator, config, config.layer);

  const fs::path run_dir = create_run_dir(config.out, config.seed, started);
  save_components(pcs, run_dir, "pca");
  write_mesh_and_views(*generator, code, config.views, rc, run_dir / "base");
  for (int i = 0; i < pcs.count(); ++i) {
    Direction dir;
    dir.delta = pcs.components.row(i).transpose();
    dir.tap_layer = pcs.tap_layer;
    dir.provenance.prompt = "pc_" + std::to_string(i);
    DirectionRecord{dir}.save(run_dir / ("pc_" + std::to_string(i) + ".txt"));
    for (int n : {-1, 1}) {
      const std::string name = n < 0 ? "minus" : "plus";
      write_mesh_and_views(*generator, apply_component(code, pcs, i, alpha, n), config.views, rc,
                           run_dir / ("pc_" + std::to_string(i)) / name);
    }
  }
  write_manifest(config, Command::pca, run_dir, started);
  return run_dir;
}

fs::path eval(const RunConfig& config) {
  const auto started = std::chrono::system_clock::now();
  const auto joint = joint_from(config.embedder);
  const auto identity = identity_from(config.id_embedder);
  RenderSet original;
  RenderSet manipulated;
  for (const auto& p : config.original_renders) original.images.push_back(read_png(p));
  for (const auto& p : config.manipulated_renders) manipulated.images.push_back(read_png(p));
  const ClipTarget target = config.prompts.empty()
                                ? ClipTarget::from_image(read_png(config.target_image), *joint)
                                : ClipTarget::from_prompts(expand_prompt(config.prompts, templates_for(config)), *joint);
  const EvalReport report = evaluate_renders(original, manipulated, target, *joint, *identity);

  const fs::path run_dir = create_run_dir(config.out, config.seed, started);
  report.save(run_dir / "eval.txt");
  write_manifest(config, Command::eval, run_dir, started);
  return run_dir;
}

} // namespace

EmbedderManifest builtin_joint_manifest() {
  EmbedderManifest m;
  m.dim = 64;
  m.seed = 1;
  m.input_side = 64;
  return m;
}

EmbedderManifest builtin_identity_manifest() {
  EmbedderManifest m;
  m.dim = 64;
  m.seed = 2;
  m.input_side = 64;
  return m;
}

void init_reference(const ReferenceGeneratorConfig& generator, const fs::path& dir) {
  fs::create_directories(dir);
  write_reference_backend(generator, dir);
  builtin_joint_manifest().save(dir / "joint.manifest");
  builtin_identity_manifest().save(dir / "identity.manifest");
}

CommandResult run_command(Command command, const RunConfig& config) {
  CommandResult result;
  try {
    config.validate(command);
    if (config.jobs > 0) {
      omp_set_num_threads(config.jobs);
    }
    switch (command) {
      case Command::manipulate: result.run_dir = manipulate(config); break;
      case Command::apply: result.run_dir = apply(config); break;
      case Command::pca: result.run_dir = pca(config); break;
      case Command::eval: result.run_dir = eval(config); break;
    }
  } catch (const NumericalError& e) {
    result.exit_code = kExitNumerical;
    result.message = e.what();
  } catch (const InvalidArgument& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const InvalidData& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const IoError& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const fs::filesystem_error& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitInternal;
    result.message = e.what();
  }
  return result;
}

} // namespace latentface

#include "cli.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "latentface/commands.hpp"
#include "latentface/error.hpp"

namespace latentface::cli {

namespace fs = std::filesystem;

namespace {

using Setter = std::function<void(RunConfig&)>;

/// Registers `name` on `app` and queues `apply` to run only when the flag
/// was actually given, so unset flags never override the config file.
template <typename T, typename Apply>
CLI::Option* option(CLI::App* app, std::vector<Setter>& setters, const std::string& name, const std::string& help,
                    Apply apply) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(name, *value, help);
  setters.push_back([opt, value, apply](RunConfig& config) {
    if (opt->count() > 0) {
      apply(config, *value);
    }
  });
  return opt;
}

void common_options(CLI::App* app, std::vector<Setter>& s) {
  option<std::string>(app, s, "--backend", "generator backend manifest",
                      [](RunConfig& c, const std::string& v) { c.backend = v; });
  option<std::string>(app, s, "--embedder", "joint text/image embedder manifest (default: built-in)",
                      [](RunConfig& c, const std::string& v) { c.embedder = v; });
  option<std::string>(app, s, "--id-embedder", "identity embedder manifest (default: built-in)",
                      [](RunConfig& c, const std::string& v) { c.id_embedder = v; });
  option<std::string>(app, s, "--layer", "tap layer for edits (default: first trunk layer)",
                      [](RunConfig& c, const std::string& v) { c.layer = v; });
  option<std::uint64_t>(app, s, "--seed", "latent seed (default 0)",
                        [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  option<std::vector<double>>(app, s, "--views", "view yaws in degrees (default -30,3,30)",
                              [](RunConfig& c, const std::vector<double>& v) { c.views = v; })
      ->delimiter(',');
  option<std::string>(app, s, "--out", "output root; runs go to <out>/run-<timestamp>-seed<seed>",
                      [](RunConfig& c, const std::string& v) { c.out = v; });
  option<int>(app, s, "--image-size", "render side in pixels (default 224)",
              [](RunConfig& c, int v) { c.image_size = v; });
  option<std::string>(app, s, "--expression", "neutral, happy, angry, sad, afraid, disgusted or surprised",
                      [](RunConfig& c, const std::string& v) { c.expression = v; });
  option<int>(app, s, "--jobs", "OpenMP threads for the kernels (default: runtime default)",
              [](RunConfig& c, int v) { c.jobs = v; });
}

void target_options(CLI::App* app, std::vector<Setter>& s) {
  option<std::vector<std::string>>(app, s, "--prompt", "target text; repeat for several prompts",
                                   [](RunConfig& c, const std::vector<std::string>& v) { c.prompts = v; });
  option<std::string>(app, s, "--target-image", "target image (PNG) instead of prompts",
                      [](RunConfig& c, const std::string& v) { c.target_image = v; });
  option<std::string>(app, s, "--templates", "prompt template file, one per line (default: built-in 74)",
                      [](RunConfig& c, const std::string& v) { c.templates = v; });
}

} // namespace

Invocation parse(const std::vector<std::string>& args) {
  Invocation inv;
  CLI::App app{"Text- and image-guided edits of generated 3D face meshes", "latentface"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LATENTFACE_VERSION));

  std::string config_path;
  std::vector<Setter> setters;

  CLI::App* manipulate = app.add_subcommand("manipulate", "optimize an edit direction for a prompt or target image");
  CLI::App* apply = app.add_subcommand("apply", "apply a saved direction at several strengths");
  CLI::App* pca = app.add_subcommand("pca", "fit principal directions of the tap layer and render sweeps");
  CLI::App* eval = app.add_subcommand("eval", "score original vs manipulated renders");
  CLI::App* init = app.add_subcommand("init-reference", "write reference generator and embedder manifests");

  for (CLI::App* sub : {manipulate, apply, pca, eval}) {
    sub->add_option("--config", config_path, "key-value config file; flags override it")->check(CLI::ExistingFile);
    common_options(sub, setters);
  }
  for (CLI::App* sub : {manipulate, eval}) {
    target_options(sub, setters);
  }

  option<int>(manipulate, setters, "--steps", "optimization steps (default 100)",
              [](RunConfig& c, int v) { c.steps = v; });
  option<double>(manipulate, setters, "--lr", "learning rate (default 0.01)",
                 [](RunConfig& c, double v) { c.learning_rate = v; });
  option<double>(manipulate, setters, "--lambda-id", "identity loss weight (default 0.01)",
                 [](RunConfig& c, double v) { c.weights.lambda_id = v; });
  option<double>(manipulate, setters, "--lambda-l2", "edit norm weight (default 0.001)",
                 [](RunConfig& c, double v) { c.weights.lambda_l2 = v; });

  option<std::string>(apply, setters, "--direction", "direction record written by manipulate or pca",
                      [](RunConfig& c, const std::string& v) { c.direction = v; });
  option<std::vector<double>>(apply, setters, "--alpha", "strengths (default 0,1,2,3)",
                              [](RunConfig& c, const std::vector<double>& v) { c.alphas = v; })
      ->delimiter(',');

  option<int>(pca, setters, "--samples", "sampled codes (default 10000)",
              [](RunConfig& c, int v) { c.samples = v; });
  option<int>(pca, setters, "--components", "components to keep (default 5)",
              [](RunConfig& c, int v) { c.components = v; });
  option<double>(pca, setters, "--alpha", "step size along each component (default 10)",
                 [](RunConfig& c, double v) { c.alphas = {v}; });

  option<std::vector<std::string>>(eval, setters, "--original", "original render PNGs, one per view",
                                   [](RunConfig& c, const std::vector<std::string>& v) {
                                     c.original_renders.assign(v.begin(), v.end());
                                   });
  option<std::vector<std::string>>(eval, setters, "--manipulated", "manipulated render PNGs, aligned with --original",
                                   [](RunConfig& c, const std::vector<std::string>& v) {
                                     c.manipulated_renders.assign(v.begin(), v.end());
                                   });

  std::string init_out = "reference";
  std::string activation = "tanh";
  init->add_option("--out", init_out, "directory for the manifests (default ./reference)");
  init->add_option("--latent-dim", inv.reference.latent_dim, "latent size")->check(CLI::PositiveNumber);
  init->add_option("--uv-resolution", inv.reference.uv_resolution, "UV map side")->check(CLI::Range(2, 1024));
  init->add_option("--activation", activation, "trunk activation")->check(CLI::IsMember({"tanh", "linear"}));
  init->add_option("--seed", inv.reference.seed, "weight seed");

  std::vector<const char*> argv{"latentface"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream out;
    std::ostringstream err;
    inv.exit_code = app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    inv.output = out.str() + err.str();
    return inv;
  }

  if (init->parsed()) {
    inv.subcommand = init->get_name();
    inv.init_dir = init_out;
    inv.reference.activation = activation == "linear" ? Activation::linear : Activation::tanh;
    return inv;
  }

  const std::pair<CLI::App*, Command> commands[] = {
      {manipulate, Command::manipulate}, {apply, Command::apply}, {pca, Command::pca}, {eval, Command::eval}};
  for (const auto& [sub, command] : commands) {
    if (sub->parsed()) {
      inv.subcommand = sub->get_name();
      inv.command = command;
    }
  }
  try {
    if (!config_path.empty()) {
      inv.config.apply_document(KeyValueDocument::load(config_path));
    }
    for (const auto& set : setters) {
      set(inv.config);
    }
  } catch (const std::exception& e) {
    inv.exit_code = kExitConfig;
    inv.output = std::string("error: ") + e.what() + "\n";
  }
  return inv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Invocation inv = parse(args);
  if (inv.exit_code >= 0) {
    (inv.exit_code == kExitOk ? out : err) << inv.output;
    return inv.exit_code;
  }
  if (inv.subcommand == "init-reference") {
    try {
      init_reference(inv.reference, inv.init_dir);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    out << fs::absolute(inv.init_dir).lexically_normal().string() << "\n";
    return kExitOk;
  }
  const CommandResult result = run_command(inv.command, inv.config);
  if (result.exit_code != kExitOk) {
    err << "error: " << result.message << "\n";
    return result.exit_code;
  }
  out << result.run_dir.string() << "\n";
  return kExitOk;
}

} // namespace latentface::cli

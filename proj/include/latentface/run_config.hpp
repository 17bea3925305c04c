#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentface/kv.hpp"
#include "latentface/latent.hpp"
#include "latentface/losses.hpp"
#include "latentface/pca.hpp"
#include "latentface/render.hpp"

namespace latentface {

enum class Command { manipulate, apply, pca, eval };

const char* command_name(Command command);

/// Fully resolved settings of one CLI invocation. Defaults follow the
/// reference optimization setup: 100 steps, lambda_id 0.01, lambda_l2 0.001,
/// three views at yaw -30, 3, 30.
///
/// Empty embedder paths select the built-in reference embedders; an empty
/// layer selects the backend's default tap; empty alphas select the
/// command's default sweep.
struct RunConfig {
  std::filesystem::path backend;
  std::filesystem::path embedder;
  std::filesystem::path id_embedder;
  std::vector<std::string> prompts;
  std::filesystem::path target_image;
  std::filesystem::path templates;
  LossWeights weights;
  int steps = 100;
  double learning_rate = 0.01;
  std::string layer;
  std::uint64_t seed = 0;
  std::vector<double> views = kDefaultYaws;
  int image_size = 224;
  std::string expression = "neutral";
  std::filesystem::path out = "out";
  int jobs = 0; // 0 keeps the OpenMP default

  std::filesystem::path direction;
  std::vector<double> alphas;

  int samples = kDefaultPcaSamples;
  int components = 5;

  std::vector<std::filesystem::path> original_renders;
  std::vector<std::filesystem::path> manipulated_renders;

  /// Key-value form; `from_document` of the result reproduces this config.
  KeyValueDocument to_document() const;

  /// Overrides every field whose key is present in `doc`. Keys under `run.`
  /// (run metadata written next to the config) are ignored; any other
  /// unknown key is rejected with InvalidArgument.
  void apply_document(const KeyValueDocument& doc);

  /// Checks everything that can be checked without loading models,
  /// including that referenced input files exist. Throws InvalidArgument.
  void validate(Command command) const;

  // Resolved alpha sweep: apply defaults to {0, 1, 2, 3}, pca to {10}.
  std::vector<double> resolved_alphas(Command command) const;
};

ExpressionVector parse_expression(const std::string& name);

} // namespace latentface

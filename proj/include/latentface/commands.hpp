#pragma once

#include <filesystem>
#include <string>

#include "latentface/embed.hpp"
#include "latentface/generator.hpp"
#include "latentface/run_config.hpp"

namespace latentface {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct CommandResult {
  int exit_code = kExitOk;
  std::filesystem::path run_dir; // empty when nothing was written
  std::string message;
};

/// Validates `config`, loads every model it names, and only then creates
/// `<out>/run-<UTC timestamp>-seed<seed>` and writes artifacts into it.
/// Exceptions are mapped to exit codes: InvalidArgument, InvalidData and
/// IoError to kExitConfig, NumericalError to kExitNumerical.
CommandResult run_command(Command command, const RunConfig& config);

// Embedder settings used when no embedder manifest is given.
EmbedderManifest builtin_joint_manifest();
EmbedderManifest builtin_identity_manifest();

/// Writes generator.manifest/.weights plus joint.manifest and
/// identity.manifest (the built-in embedder settings) into `dir`.
void init_reference(const ReferenceGeneratorConfig& generator, const std::filesystem::path& dir);

} // namespace latentface

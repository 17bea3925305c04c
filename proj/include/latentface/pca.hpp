#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latentface/generator.hpp"
#include "latentface/kernels.hpp"
#include "latentface/latent.hpp"

namespace latentface {

inline constexpr int kDefaultPcaSamples = 10000;
inline constexpr double kDefaultPcaStep = 10.0;

struct LatentSampleMatrix {
  Eigen::MatrixXd rows; // n x width
  std::string tap_layer;
  std::uint64_t seed = 0;
};

/// Row i is the intermediate code of sample_latent(seed + i) with a neutral
/// expression. Rows are independent, so the parallel path fills them
/// concurrently and matches the serial path exactly.
LatentSampleMatrix collect_samples(
    const GeneratorBackend& generator,
    int n,
    const std::string& tap,
    std::uint64_t seed,
    double sigma = 1.0,
    Execution exec = Execution::parallel);

struct PrincipalComponentSet {
  Eigen::MatrixXd components; // k x width, row i = PC_i, unit length
  Eigen::VectorXd mean;
  Eigen::VectorXd explained_variance; // descending
  std::vector<bool> rank_deficient;   // true where the variance is numerically zero
  std::string tap_layer;
  int samples = 0;
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(components.rows()); }
};

/// Principal axes of the centered samples via thin SVD. Each component is
/// signed so that its largest-magnitude entry is positive.
PrincipalComponentSet fit_pca(const LatentSampleMatrix& samples, int k);

/// c + alpha * n_steps * PC_i.
IntermediateCode apply_component(
    const IntermediateCode& c,
    const PrincipalComponentSet& pcs,
    int index,
    double alpha = kDefaultPcaStep,
    int n_steps = 1);

/// Writes `<stem>.meta` (key-value metadata: tap layer, n, seed, variances)
/// and `<stem>.matrix` (one component per line, mean on the first line).
void save_components(const PrincipalComponentSet& pcs, const std::filesystem::path& dir, const std::string& stem = "pca");
PrincipalComponentSet load_components(const std::filesystem::path& dir, const std::string& stem = "pca");

} // namespace latentface

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "latentface/embed.hpp"
#include "latentface/generator.hpp"
#include "latentface/image.hpp"
#include "latentface/render.hpp"

namespace latentface::test {

/// Small reference stack used across tests: a 32-px renderer, a 16x16 UV
/// generator and embedders sized for 32-px inputs.
struct Stack {
  ReferenceGenerator generator;
  ReferenceJointEmbedder joint;
  ReferenceIdentityEmbedder identity;
  RenderConfig render;

  explicit Stack(Activation activation = Activation::tanh, int joint_dim = 32)
      : generator(make_config(activation)), joint(11, joint_dim, 32), identity(13, joint_dim, 32) {
    render.camera.image_size = 32;
  }

  static ReferenceGeneratorConfig make_config(Activation activation) {
    ReferenceGeneratorConfig config;
    config.activation = activation;
    return config;
  }
};

// Unique empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("latentface-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Joint embedder whose image embedding is (cos t, sin t) with t taken from
/// the image's mean intensity through `angle_of_mean`; every text embeds to
/// (1, 0). Cosine distance to the text is therefore 1 - cos t.
class AngleEmbedder final : public JointEmbedder, public IdentityEmbedder {
 public:
  explicit AngleEmbedder(std::function<double(double)> angle_of_mean = [](double m) { return m; })
      : angle_(std::move(angle_of_mean)) {}

  int dim() const override { return 2; }
  EmbeddingVector embed_text(std::string_view) const override { return EmbeddingVector::unit(Eigen::Vector2d(1, 0)); }
  EmbeddingVector embed_image(const Image& image) const override {
    const double t = angle_(image.mean());
    return EmbeddingVector::unit(Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  Image embed_image_vjp(const Image& image, const Eigen::VectorXd& grad) const override {
    const double m = image.mean();
    const double t = angle_(m);
    const double h = 1e-6;
    const double dt = (angle_(m + h) - angle_(m - h)) / (2 * h);
    const double dm = (-std::sin(t) * grad[0] + std::cos(t) * grad[1]) * dt;
    Image out(image.height, image.width, image.channels, dm / static_cast<double>(image.size()));
    return out;
  }
  EmbeddingVector embed_identity(const Image& image) const override { return embed_image(image); }
  Image embed_identity_vjp(const Image& image, const Eigen::VectorXd& grad) const override {
    return embed_image_vjp(image, grad);
  }

 private:
  std::function<double(double)> angle_;
};

// Central difference of f along coordinate `i` of x.
inline double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x, int i,
                                 double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double plus = f(x);
  x[i] = x0 - h;
  const double minus = f(x);
  return (plus - minus) / (2 * h);
}

} // namespace latentface::test

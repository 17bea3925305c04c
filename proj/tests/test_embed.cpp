#include <doctest.h>

#include "latentface/embed.hpp"
#include "latentface/error.hpp"
#include "latentface/rng.hpp"
#include "support.hpp"

using namespace latentface;
using latentface::test::TempDir;

namespace {

Image noise_image(int side, std::uint64_t seed) {
  GaussianStream g(seed);
  Image img(side, side, 3);
  for (double& p : img.pixels) {
    p = g.uniform();
  }
  return img;
}

} // namespace

TEST_CASE("cosine distance") {
  const auto a = EmbeddingVector::unit(Eigen::Vector3d(1.0, 2.0, 3.0));
  const auto b = EmbeddingVector::unit(Eigen::Vector3d(-2.0, 1.0, 0.0));
  const auto minus_a = EmbeddingVector::unit(Eigen::Vector3d(-1.0, -2.0, -3.0));
  CHECK(cosine_distance(a, a) == 0.0);
  CHECK(cosine_distance(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_distance(a, minus_a) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, minus_a) == doctest::Approx(-1.0));

  const auto c = EmbeddingVector::unit(Eigen::Vector3d(1.0, 0.5, 3.2));
  CHECK(cosine_distance(a, c) == doctest::Approx(1.0 - a.values.dot(c.values)).epsilon(1e-14));

  const auto two = EmbeddingVector::unit(Eigen::Vector2d(1.0, 0.0));
  CHECK_THROWS_AS(cosine_distance(a, two), InvalidArgument);
  EmbeddingVector raw{Eigen::Vector3d(1.0, 1.0, 1.0), false};
  CHECK_THROWS_AS(cosine_distance(a, raw), InvalidArgument);
  CHECK_THROWS_AS(EmbeddingVector::unit(Eigen::Vector3d::Zero()), InvalidData);
}

TEST_CASE("image embeddings are unit length and scale invariant") {
  const ReferenceJointEmbedder emb(5, 16, 32);
  const Image img = noise_image(32, 1);
  const EmbeddingVector e = emb.embed_image(img);
  CHECK(e.normalized);
  CHECK(e.dim() == 16);
  CHECK(e.values.norm() == doctest::Approx(1.0).epsilon(1e-12));

  Image scaled = img;
  for (double& p : scaled.pixels) {
    p *= 2.5;
  }
  CHECK((emb.embed_image(scaled).values - e.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(emb.embed_image(img).values == e.values);
}

TEST_CASE("uniform and resized images embed") {
  const ReferenceJointEmbedder emb(5, 16, 32);
  CHECK_NOTHROW(emb.embed_image(Image(32, 32, 3, 0.5)));
  const EmbeddingVector big = emb.embed_image(noise_image(64, 2));
  CHECK(big.values.norm() == doctest::Approx(1.0));
}

TEST_CASE("text embeddings are deterministic and distinct") {
  const ReferenceJointEmbedder emb(5, 16, 32);
  const ReferenceJointEmbedder other_seed(6, 16, 32);
  const EmbeddingVector a = emb.embed_text("a photo of a smiling face");
  CHECK(a.values == emb.embed_text("a photo of a smiling face").values);
  CHECK(a.values.norm() == doctest::Approx(1.0));
  CHECK(cosine_distance(a, emb.embed_text("a photo of an angry face")) > 0.1);
  CHECK(a.values != other_seed.embed_text("a photo of a smiling face").values);
}

TEST_CASE("embed_image_vjp matches central differences") {
  for (int side : {32, 24}) {
    const ReferenceJointEmbedder emb(7, 8, 32);
    const Image img = noise_image(side, 3);
    const Eigen::VectorXd g = sample_latent(4, 8, 1.0).values;
    const Image grad = emb.embed_image_vjp(img, g);
    REQUIRE(grad.same_shape(img));
    const double h = 1e-6;
    for (const std::size_t idx : std::vector<std::size_t>{0, 100, 777, img.size() - 1}) {
      Image plus = img;
      Image minus = img;
      plus.pixels[idx] += h;
      minus.pixels[idx] -= h;
      const double numeric = (g.dot(emb.embed_image(plus).values) - g.dot(emb.embed_image(minus).values)) / (2 * h);
      CHECK(grad.pixels[idx] == doctest::Approx(numeric).epsilon(1e-6));
    }
  }
}

TEST_CASE("identity and joint embedders use independent projections") {
  const auto joint = reference_joint_embedder(9, 16, 32);
  const auto identity = reference_identity_embedder(9, 16, 32);
  const Image img = noise_image(32, 5);
  CHECK(joint->embed_image(img).values != identity->embed_identity(img).values);
  CHECK_THROWS_AS(reference_joint_embedder(1, 1, 32), InvalidArgument);
}

TEST_CASE("embedder manifests") {
  TempDir dir;
  EmbedderManifest m;
  m.dim = 12;
  m.seed = 44;
  m.input_side = 32;
  m.save(dir / "joint.manifest");
  const EmbedderManifest back = EmbedderManifest::load(dir / "joint.manifest");
  CHECK(back.dim == 12);
  CHECK(back.seed == 44u);
  CHECK(back.input_side == 32);

  const auto loaded = load_joint_embedder(dir / "joint.manifest");
  const ReferenceJointEmbedder direct(44, 12, 32);
  const Image img = noise_image(32, 6);
  CHECK(loaded->embed_image(img).values == direct.embed_image(img).values);
  CHECK(loaded->embed_text("x").values == direct.embed_text("x").values);

  EmbedderManifest clip = m;
  clip.kind = "clip-vit-b32";
  clip.save(dir / "clip.manifest");
  CHECK_THROWS_AS(load_joint_embedder(dir / "clip.manifest"), InvalidArgument);
  CHECK_THROWS_AS(load_identity_embedder(dir / "missing.manifest"), InvalidArgument);
}

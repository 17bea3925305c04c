#include <doctest.h>

#include <cmath>

#include "latentface/error.hpp"
#include "latentface/losses.hpp"
#include "support.hpp"

using namespace latentface;
using latentface::test::AngleEmbedder;

namespace {

// Render whose stub embedding sits at cosine distance `d` from (1, 0).
Image image_at_distance(double d) { return Image(4, 4, 3, std::acos(1.0 - d)); }

RenderSet renders_at(const std::vector<double>& distances) {
  RenderSet set;
  for (double d : distances) {
    set.images.push_back(image_at_distance(d));
    set.cameras.emplace_back();
  }
  return set;
}

// Texts "x" and "y" embed to the two axes; images as in AngleEmbedder.
class TwoAxisEmbedder final : public JointEmbedder {
 public:
  int dim() const override { return 2; }
  EmbeddingVector embed_text(std::string_view text) const override {
    return EmbeddingVector::unit(text == "x" ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1));
  }
  EmbeddingVector embed_image(const Image& image) const override { return inner_.embed_image(image); }
  Image embed_image_vjp(const Image& image, const Eigen::VectorXd& grad) const override {
    return inner_.embed_image_vjp(image, grad);
  }

 private:
  AngleEmbedder inner_;
};

} // namespace

TEST_CASE("per-view semantic distances are arithmetic-averaged") {
  const AngleEmbedder emb;
  const PromptBatch batch{{"anything"}, {"anything"}};
  CHECK(clip_text_loss(renders_at({0.2, 0.4, 0.6, 0.8}), batch, emb) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(clip_text_loss(renders_at({0.1, 0.3, 1.1}), batch, emb) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(clip_text_loss(renders_at({0.7}), batch, emb) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("semantic loss averages over every (render, target) pair") {
  const TwoAxisEmbedder emb;
  const PromptBatch batch{{"x", "y"}, {"x", "y"}};
  const std::vector<double> angles = {0.3, 0.9, 1.2};
  RenderSet set;
  double expected = 0.0;
  for (double t : angles) {
    set.images.push_back(Image(4, 4, 3, t));
    expected += (1.0 - std::cos(t)) + (1.0 - std::sin(t));
  }
  expected /= 6.0;
  CHECK(clip_text_loss(set, batch, emb) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("image target loss") {
  const AngleEmbedder emb;
  const Image target(4, 4, 3, 0.4);
  RenderSet set;
  set.images = {Image(4, 4, 3, 0.4), Image(4, 4, 3, 1.0)};
  CHECK(clip_image_loss(set, target, emb) == doctest::Approx((0.0 + (1.0 - std::cos(0.6))) / 2.0).epsilon(1e-12));
}

TEST_CASE("identity loss is zero for identical renders and averages per view") {
  const AngleEmbedder emb;
  const RenderSet original = renders_at({0.2, 0.4, 0.6});
  CHECK(identity_loss(original, original, emb) == 0.0);
  RenderSet moved = original;
  moved.images[1] = Image(4, 4, 3, std::acos(1.0 - 0.4) + 0.5);
  CHECK(identity_loss(original, moved, emb) == doctest::Approx((1.0 - std::cos(0.5)) / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(identity_loss(original, renders_at({0.1}), emb), InvalidArgument);
}

TEST_CASE("loss gradients pass through the embedder adjoint") {
  const AngleEmbedder emb;
  const PromptBatch batch{{"t"}, {"t"}};
  const ClipTarget target = ClipTarget::from_prompts(batch, emb);
  const RenderSet set = renders_at({0.3, 0.5});
  const ImageLoss loss = target.evaluate(set, emb, true);
  REQUIRE(loss.grads.size() == 2u);
  // dL/dt_i = sin(t_i) / N, spread evenly over the 48 pixel values.
  for (int i = 0; i < 2; ++i) {
    const double t = set.images[i].pixels[0];
    CHECK(loss.grads[i].pixels[0] * 48.0 == doctest::Approx(std::sin(t) / 2.0).epsilon(1e-6));
  }
}

TEST_CASE("edit-norm term") {
  const Eigen::Vector3d d(3.0, 0.0, 4.0);
  CHECK(l2_loss(d) == 5.0);
  CHECK(l2_loss(Eigen::VectorXd::Zero(4)) == 0.0);
  CHECK(l2_loss_gradient(Eigen::VectorXd::Zero(4)).isZero(0.0));
  const Eigen::VectorXd g = l2_loss_gradient(d);
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[2] == doctest::Approx(0.8));
  Direction dir{d, "dense", {}};
  CHECK(l2_loss(dir) == 5.0);
}

TEST_CASE("total loss weighting and defaults") {
  const LossWeights w;
  CHECK(w.lambda_id == 0.01);
  CHECK(w.lambda_l2 == 0.001);
  CHECK(total_loss(0.5, 0.2, 3.0, w) == doctest::Approx(0.5 + 0.002 + 0.003));
  CHECK(total_loss(0.5, 0.0, 0.0, w) == 0.5);
  CHECK_THROWS_AS((LossWeights{-0.1, 0.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((LossWeights{0.0, std::nan("")}.validate()), InvalidArgument);
  CHECK_NOTHROW((LossWeights{0.0, 0.0}.validate()));
}

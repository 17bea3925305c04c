#include <doctest.h>

#include <fstream>

#include "latentface/error.hpp"
#include "latentface/generator.hpp"
#include "latentface/rng.hpp"
#include "support.hpp"

using namespace latentface;
using latentface::test::TempDir;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
  }
  return m;
}

double max_abs_diff(const UVMapSet& a, const UVMapSet& b) {
  return std::max({max_abs_diff(a.shape, b.shape), max_abs_diff(a.normal, b.normal),
                   max_abs_diff(a.texture, b.texture)});
}

// <g, maps> summed over all three modalities.
double pair(const UVMapSet& g, const UVMapSet& maps) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.shape.size(); ++i) {
    s += g.shape.pixels[i] * maps.shape.pixels[i] + g.normal.pixels[i] * maps.normal.pixels[i] +
         g.texture.pixels[i] * maps.texture.pixels[i];
  }
  return s;
}

UVMapSet random_maps(int res, std::uint64_t seed) {
  GaussianStream g(seed);
  UVMapSet m{Image(res, res), Image(res, res), Image(res, res)};
  for (Image* img : {&m.shape, &m.normal, &m.texture}) {
    for (double& p : img->pixels) {
      p = g.next();
    }
  }
  return m;
}

} // namespace

TEST_CASE("reference generator layout") {
  ReferenceGenerator gen(ReferenceGeneratorConfig{});
  CHECK(gen.latent_dim() == 32);
  CHECK(gen.uv_resolution() == 16);
  CHECK(gen.default_tap() == "dense");
  CHECK(gen.layer_width("dense") == 64);
  CHECK(gen.layer_width("mid") == 48);
  CHECK_THROWS_AS(gen.layer_width("nope"), InvalidArgument);

  const LatentCode z = sample_latent(1, 32, 1.0);
  const UVMapSet maps = gen.forward(z, ExpressionVector::neutral());
  CHECK(maps.height() == 16);
  CHECK(maps.width() == 16);
  CHECK_NOTHROW(maps.validate());
  CHECK_THROWS_AS(gen.partial_forward(sample_latent(1, 31, 1.0), ExpressionVector::neutral(), "dense"),
                  InvalidArgument);
  CHECK_THROWS_AS(gen.partial_forward(z, ExpressionVector::neutral(), "nope"), InvalidArgument);
}

TEST_CASE("partial forward composed with the rest equals the full forward") {
  ReferenceGenerator gen(ReferenceGeneratorConfig{});
  const LatentCode z = sample_latent(5, 32, 1.0);
  const auto e = ExpressionVector::one_hot(Expression::surprised);
  const UVMapSet full = gen.forward(z, e);
  for (const auto& layer : gen.layers()) {
    const IntermediateCode c = gen.partial_forward(z, e, layer.name);
    CHECK(c.dim() == layer.width);
    CHECK(c.tap_layer == layer.name);
    CHECK(max_abs_diff(gen.forward_from_intermediate(c), full) < 1e-12);
  }
}

TEST_CASE("expression input changes the output") {
  ReferenceGenerator gen(ReferenceGeneratorConfig{});
  const LatentCode z = sample_latent(5, 32, 1.0);
  const UVMapSet neutral = gen.forward(z, ExpressionVector::neutral());
  const UVMapSet happy = gen.forward(z, ExpressionVector::one_hot(Expression::happy));
  CHECK(max_abs_diff(neutral, happy) > 1e-6);
}

TEST_CASE("linear generator is affine in the intermediate code") {
  ReferenceGeneratorConfig config;
  config.activation = Activation::linear;
  ReferenceGenerator gen(config);
  const IntermediateCode c = gen.partial_forward(sample_latent(3, 32, 1.0), ExpressionVector::neutral(), "dense");
  IntermediateCode d = c;
  d.values = sample_latent(4, 64, 1.0).values;

  const UVMapSet g0 = gen.forward_from_intermediate(c);
  IntermediateCode c1 = c;
  c1.values += d.values;
  IntermediateCode c3 = c;
  c3.values += 3.0 * d.values;
  const UVMapSet g1 = gen.forward_from_intermediate(c1);
  const UVMapSet g3 = gen.forward_from_intermediate(c3);
  for (std::size_t i = 0; i < g0.shape.size(); ++i) {
    CHECK(g3.shape.pixels[i] - g0.shape.pixels[i] ==
          doctest::Approx(3.0 * (g1.shape.pixels[i] - g0.shape.pixels[i])).epsilon(1e-9));
    CHECK(g3.texture.pixels[i] - g0.texture.pixels[i] ==
          doctest::Approx(3.0 * (g1.texture.pixels[i] - g0.texture.pixels[i])).epsilon(1e-9));
  }
}

TEST_CASE("forward_from_intermediate_vjp matches central differences") {
  ReferenceGenerator gen(ReferenceGeneratorConfig{});
  const IntermediateCode c = gen.partial_forward(sample_latent(8, 32, 1.0), ExpressionVector::neutral(), "dense");
  const UVMapSet g = random_maps(16, 77);
  const Eigen::VectorXd analytic = gen.forward_from_intermediate_vjp(c, g);
  REQUIRE(analytic.size() == c.dim());

  const auto f = [&](const Eigen::VectorXd& v) { return pair(g, gen.forward_from_intermediate({v, "dense"})); };
  for (int i : {0, 7, 21, 40, 63}) {
    const double numeric = test::central_difference(f, c.values, i, 1e-5);
    CHECK(analytic[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("partial_forward_vjp matches central differences") {
  ReferenceGenerator gen(ReferenceGeneratorConfig{});
  const LatentCode z = sample_latent(9, 32, 1.0);
  const auto e = ExpressionVector::one_hot(Expression::sad);
  const Eigen::VectorXd grad_c = sample_latent(10, 48, 1.0).values;
  const LatentGradient analytic = gen.partial_forward_vjp(z, e, "mid", grad_c);
  REQUIRE(analytic.z.size() == 32);

  const auto f = [&](const Eigen::VectorXd& v) {
    LatentCode zz = z;
    zz.values = v;
    return grad_c.dot(gen.partial_forward(zz, e, "mid").values);
  };
  for (int i : {0, 5, 17, 31}) {
    CHECK(analytic.z[i] == doctest::Approx(test::central_difference(f, z.values, i, 1e-5)).epsilon(1e-6));
  }
}

TEST_CASE("weights and manifests round-trip") {
  TempDir dir;
  ReferenceGeneratorConfig config;
  config.seed = 77;
  config.activation = Activation::linear;
  config.layers = {{"a", 20}, {"b", 12}};
  const auto manifest = write_reference_backend(config, dir.path());
  const auto loaded = load_generator(manifest);
  ReferenceGenerator direct(config);

  CHECK(loaded->latent_dim() == 32);
  CHECK(loaded->layers().size() == 2);
  CHECK(loaded->layer_width("b") == 12);
  const LatentCode z = sample_latent(2, 32, 1.0);
  CHECK(max_abs_diff(loaded->forward(z, ExpressionVector::neutral()), direct.forward(z, ExpressionVector::neutral())) ==
        0.0);
}

TEST_CASE("load_generator rejects bad manifests and weights") {
  TempDir dir;
  CHECK_THROWS_AS(load_generator(dir / "missing.manifest"), InvalidArgument);

  const auto manifest = write_reference_backend(ReferenceGeneratorConfig{}, dir.path());
  std::string text = test::read_file(manifest);
  {
    std::ofstream out(dir / "other.manifest");
    std::string replaced = text;
    replaced.replace(replaced.find("reference"), 9, "stylegan");
    out << replaced;
  }
  CHECK_THROWS_AS(load_generator(dir / "other.manifest"), InvalidArgument);

  {
    std::ofstream out(dir / "generator.weights", std::ios::binary | std::ios::trunc);
    out << "LFGW0001";
  }
  CHECK_THROWS_AS(load_generator(manifest), InvalidData);
  {
    std::ofstream out(dir / "generator.weights", std::ios::binary | std::ios::trunc);
    out << "garbage!";
  }
  CHECK_THROWS_AS(load_generator(manifest), InvalidData);
}

TEST_CASE("uv maps reject non-finite values") {
  UVMapSet maps = random_maps(4, 1);
  CHECK_NOTHROW(maps.validate());
  maps.texture.pixels[5] = std::nan("");
  CHECK_THROWS_AS(maps.validate(), InvalidData);
  UVMapSet mismatched = random_maps(4, 1);
  mismatched.normal = Image(3, 4);
  CHECK_THROWS_AS(mismatched.validate(), InvalidArgument);
}
